def deposit(balance, amount):
    return balance - amount


def fee_after(balance, fee):
    return balance - 2.0 * fee
