import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "_harness"))
import harness

def t_above(m, rec):
    rec.close("above", 5.0, m.clamp(9.0, 0.0, 5.0), 0.001)


def t_above_far(m, rec):
    rec.check("above_far", m.clamp(99.0, 0.0, 5.0) == 5.0)


def t_below(m, rec):
    rec.close("below", 0.0, m.clamp(-3.0, 0.0, 5.0), 0.001)


def t_inside(m, rec):
    rec.close("inside", 2.0, m.clamp(2.0, 0.0, 5.0), 0.001)


def t_edge(m, rec):
    rec.close("edge", 5.0, m.clamp(5.0, 0.0, 5.0), 0.001)

TESTS = [("t_above", t_above), ("t_above_far", t_above_far), ("t_below", t_below), ("t_inside", t_inside), ("t_edge", t_edge)]

if __name__ == "__main__":
    harness.run(TESTS)
