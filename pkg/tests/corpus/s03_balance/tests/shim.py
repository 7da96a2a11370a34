import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "_harness"))
import harness

def t_rate5(m, rec):
    rec.close("rate5", 105.0, m.balance(100.0, 5.0), 0.01)


def t_rate10(m, rec):
    rec.close("rate10", 110.0, m.balance(100.0, 10.0), 0.01)


def t_zero_rate(m, rec):
    rec.close("zero_rate", 100.0, m.balance(100.0, 0.0), 0.01)


def t_desc(m, rec):
    rec.close("desc", 3.0, m.describe(100), 0.001)

TESTS = [("t_rate5", t_rate5), ("t_rate10", t_rate10), ("t_zero_rate", t_zero_rate), ("t_desc", t_desc)]

if __name__ == "__main__":
    harness.run(TESTS)
