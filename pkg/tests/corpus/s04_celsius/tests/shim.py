import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "_harness"))
import harness

def t_boil(m, rec):
    rec.close("boil", 212.0, m.to_fahrenheit(100.0), 0.01)


def t_freeze(m, rec):
    rec.close("freeze", 32.0, m.to_fahrenheit(0.0), 0.01)


def t_minus40(m, rec):
    rec.close("minus40", -40.0, m.to_fahrenheit(-40.0), 0.01)


def t_back_boil(m, rec):
    rec.close("back_boil", 100.0, m.to_celsius(212.0), 0.01)


def t_back_freeze(m, rec):
    rec.close("back_freeze", 0.0, m.to_celsius(32.0), 0.01)

TESTS = [("t_boil", t_boil), ("t_freeze", t_freeze), ("t_minus40", t_minus40), ("t_back_boil", t_back_boil), ("t_back_freeze", t_back_freeze)]

if __name__ == "__main__":
    harness.run(TESTS)
