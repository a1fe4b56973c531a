"""Hypothesis strategies for expression trees over a small coordinate set."""
from hypothesis import strategies as st

from nconn.expr import nodes as nd

COORDS = ("x1", "x2", "v")

consts = st.sampled_from([0.5, 1.0, 2.0, 3.0, -1.5, 0.25]).map(nd.const)
atoms = st.one_of(consts, st.sampled_from(COORDS).map(nd.coord))


def _extend(children):
    smooth = st.sampled_from(["sin", "cos", "neg"])
    return st.one_of(
        st.tuples(st.sampled_from(["add", "sub", "mul"]), children, children)
        .map(lambda t: getattr(nd, t[0])(t[1], t[2])),
        st.tuples(smooth, children).map(lambda t: nd.apply(t[0], t[1])),
        # exp and positive denominators keep trees defined on the sampling box
        children.map(lambda c: nd.exp(nd.mul(0.3, c))),
        st.tuples(children, children).map(
            lambda t: nd.div(t[0], nd.add(2.5, nd.sin(t[1])))),
        st.tuples(children, st.sampled_from([2, 3])).map(lambda t: nd.power(t[0], t[1])),
    )


trees = st.recursive(atoms, _extend, max_leaves=8)
points = st.fixed_dictionaries({c: st.floats(-1, 1) for c in COORDS})


def defined(e, p):
    """Value of ``e`` at ``p``; rejects the example if nested exp/powers overflow."""
    from hypothesis import assume
    from nconn.expr import DomainError, evaluate

    try:
        return evaluate(e, p)
    except DomainError:
        assume(False)
