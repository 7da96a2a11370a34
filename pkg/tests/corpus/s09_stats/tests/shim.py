import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "_harness"))
import harness

def t_mean2(m, rec):
    rec.close("mean2", 2.0, m.mean([1.0, 3.0]))


def t_mean3(m, rec):
    rec.close("mean3", 4.0, m.mean([2.0, 4.0, 6.0]))


def t_spread(m, rec):
    rec.close("spread", 3.0, m.spread([1.0, 4.0]))


def t_combo(m, rec):
    rec.close("combo", 1.0, m.spread([m.mean([1.0, 1.0]), 2.0]))


def t_count(m, rec):
    rec.close("count", 3.0, m.count_values([1.0, 1.0, 1.0]))

TESTS = [("t_mean2", t_mean2), ("t_mean3", t_mean3), ("t_spread", t_spread), ("t_combo", t_combo), ("t_count", t_count)]

if __name__ == "__main__":
    harness.run(TESTS)
