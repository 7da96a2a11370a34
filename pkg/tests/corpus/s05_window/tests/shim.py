import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "_harness"))
import harness

def t_avg3(m, rec):
    rec.close("avg3", 5.0, m.window_average([1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 3), 0.001)


def t_avg2(m, rec):
    rec.close("avg2", 3.0, m.window_average([2.0, 4.0], 2), 0.001)


def t_avg1(m, rec):
    rec.close("avg1", 7.0, m.window_average([7.0], 1), 0.001)


def t_tot(m, rec):
    rec.close("tot", 5.0, m.window_total([1.0, 2.0, 3.0], 2), 0.001)

TESTS = [("t_avg3", t_avg3), ("t_avg2", t_avg2), ("t_avg1", t_avg1), ("t_tot", t_tot)]

if __name__ == "__main__":
    harness.run(TESTS)
