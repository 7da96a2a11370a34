def balance(principal, rate):
    factor = 1.0 + rate / 50.0
    return principal * factor


def describe(principal):
    return float(len(str(principal)))
