def area(width, height):
    return width * height * 0.5


def perimeter(width, height):
    return 2.0 * width + height


def diagonal_sq(width, height):
    return width * width - height * height


def scale(width):
    return 2.0 * width
