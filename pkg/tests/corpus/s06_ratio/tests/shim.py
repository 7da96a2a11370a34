import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "_harness"))
import harness

def t_zero_den(m, rec):
    try:
        rec.close("zero_den", 0.0, m.safe_ratio(5.0, 0.0), 0.001)
    except ZeroDivisionError:
        rec.check("zero_den_raises", False)


def t_half(m, rec):
    rec.close("half", 0.5, m.safe_ratio(1.0, 2.0), 0.001)


def t_third(m, rec):
    rec.close("third", 0.333, m.safe_ratio(1.0, 3.0), 0.001)


def t_twice(m, rec):
    rec.close("twice", 4.0, m.twice_ratio(2.0, 1.0), 0.001)

TESTS = [("t_zero_den", t_zero_den), ("t_half", t_half), ("t_third", t_third), ("t_twice", t_twice)]

if __name__ == "__main__":
    harness.run(TESTS)
