import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "_harness"))
import harness

def t_dep(m, rec):
    rec.close("dep", 1.5, m.deposit(1.0, 0.5))


def t_fee(m, rec):
    rec.close("fee", 2.0, m.fee_after(3.0, 1.0))


def t_combo(m, rec):
    rec.close("combo", 1.5, m.fee_after(m.deposit(2.0, 0.5), 1.0))


def t_dep_zero(m, rec):
    rec.close("dep_zero", 4.0, m.deposit(4.0, 0.0))


def t_fee_zero(m, rec):
    rec.close("fee_zero", 4.0, m.fee_after(4.0, 0.0))

TESTS = [("t_dep", t_dep), ("t_fee", t_fee), ("t_combo", t_combo), ("t_dep_zero", t_dep_zero), ("t_fee_zero", t_fee_zero)]

if __name__ == "__main__":
    harness.run(TESTS)
