"""Print the base tables for the four-constant example and the decisions drawn from them."""

from normbpa.harness import EXAMPLE_ONE, run_report
from normbpa.refine import decide, fixpoint_base
from normbpa.relative import show_blocks
from normbpa.system import parse_system


def main() -> None:
    tables, summary = run_report(EXAMPLE_ONE)
    for i, table in enumerate(tables):
        print(f"# {'initial base' if i == 0 else f'construction {i}'}")
        print(table)
    print(f"# {summary}\n")
    sys = parse_system(EXAMPLE_ONE)
    base = fixpoint_base(sys)
    for p, q in [("A0.C", "A1.C"), ("A0", "A1"), ("A0.A0.C", "A1.A0.C"), ("A0.A0", "A1.A0")]:
        same = decide(sys, frozenset(), sys.process(p), sys.process(q))
        print(f"{p} {'~' if same else '/~'} {q}")
    for p in ("A0.C", "A1.C"):
        print(f"dcmp({p}) = {show_blocks(sys, base.dcmp(frozenset(), sys.process(p)))}")


if __name__ == "__main__":
    main()
