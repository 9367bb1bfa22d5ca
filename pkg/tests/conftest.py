import pytest

INTSQRT = """\
fun intsqrt(%in) {
start:
  br loop
loop:
  %x = phi [0, start] [%x1, body]
  %isin = <= %x %in
  br %isin body fail
body:
  %sq = * %x %x
  %done = <= %in %sq
  %x1 = + %x 1
  br %done exit loop
exit:
  ret %x
fail:
  unreachable
}
"""

INTSQRT_SIMPLIFIED = """\
fun intsqrt(%in) {
start:
  br loop
loop:
  %x = phi [0, start] [%x1, body]
  %isin = <= %x %in
  br body
body:
  %sq = * %x %x
  %done = <= %in %sq
  %x1 = + %x 1
  br %done exit loop
exit:
  ret %x
}
"""


@pytest.fixture
def intsqrt():
    from ucalc import vminus as vm
    return vm.parse_vminus(INTSQRT)


def reachable_from(entry, succ, removed=None):
    seen = set()
    stack = [entry]
    while stack:
        u = stack.pop()
        if u in seen or u == removed:
            continue
        seen.add(u)
        stack.extend(succ.get(u, ()))
    return seen


def brute_idoms(entry, succ):
    """Immediate dominators by the path definition: l dominates b iff b is
    unreachable once l is removed from the graph."""
    labels = reachable_from(entry, succ)
    dom = {}
    for b in labels:
        dom[b] = {l for l in labels
                  if l == b or b not in reachable_from(entry, succ, removed=l)}
    idoms = {}
    for b in labels:
        if b == entry:
            continue
        sdom = dom[b] - {b}
        for d in sdom:
            if dom[d] == sdom:
                idoms[b] = d
                break
        else:
            raise AssertionError(f"no immediate dominator for {b}")
    return idoms
