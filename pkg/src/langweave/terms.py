"""Term and body representation for the staged CPS calculus.

Terms are the argument-position values (variables, literals, lambdas,
tuples, opaque handles).  A lambda body is a mutable `Body` cell holding a
stage expression plus one of the body forms (application, primitive
expression, fix, or the inert result marker used by host continuations).
Evaluation rewrites bodies in place; terms themselves are immutable and
may be shared freely.

Substitution renames every binder it copies to a globally fresh name, so
capture can never occur and, after any reduction, a name that still
appears as a bare `Var` is exactly a symbolic (not-yet-supplied) value.
"""

from dataclasses import dataclass

from .errors import UnboundStageName
from .prims import (PInt, PList, PName, PQuote, PrimExpr, PStr,
                    normalize_prim, prim_alpha_eq, prim_subst)

# ---------------------------------------------------------------------------
# stage expressions


class StageExpr:
    __slots__ = ()


@dataclass(frozen=True)
class SConst(StageExpr):
    top: bool


@dataclass(frozen=True)
class SRef(StageExpr):
    name: str


@dataclass(frozen=True)
class SAnd(StageExpr):
    left: StageExpr
    right: StageExpr


@dataclass(frozen=True)
class SOr(StageExpr):
    left: StageExpr
    right: StageExpr


@dataclass(frozen=True)
class SNot(StageExpr):
    inner: StageExpr


TOP = SConst(True)
BOTTOM = SConst(False)


# ---------------------------------------------------------------------------
# terms


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Int(Term):
    value: int


@dataclass(frozen=True)
class Str(Term):
    value: str


@dataclass(frozen=True)
class Bool(Term):
    value: bool


@dataclass(frozen=True)
class StageConst(Term):
    top: bool


@dataclass(frozen=True)
class TupleT(Term):
    items: tuple  # elements may include Splice


@dataclass(frozen=True)
class Splice(Term):
    inner: Term


@dataclass(frozen=True)
class Param:
    name: str
    packed: bool = False


class Lam(Term):
    """Lambda with an implicit staging parameter.  Mutable because pack
    refinement may narrow its parameter list in place (see evaluator)."""

    __slots__ = ("params", "stage", "body")

    def __init__(self, params, stage, body):
        self.params = tuple(params)
        self.stage = stage
        self.body = body

    def __repr__(self):
        ps = ", ".join(("!" if p.packed else "") + p.name for p in self.params)
        return f"Lam(({ps})[{self.stage}])"


@dataclass(frozen=True)
class Builtin(Term):
    name: str


@dataclass(frozen=True, eq=False)
class EnvVal(Term):
    entries: tuple  # ((key, term), ...) insertion-ordered, persistent

    def insert(self, key, term):
        kept = tuple((k, v) for k, v in self.entries if k != key)
        return EnvVal(kept + ((key, term),))

    def lookup(self, key):
        for k, v in self.entries:
            if k == key:
                return v
        return None


@dataclass(frozen=True, eq=False)
class FragVal(Term):
    fragment: object


@dataclass(frozen=True, eq=False)
class RetK(Term):
    tag: int


@dataclass(frozen=True, eq=False)
class Rec(Term):
    name: str
    value: Term


# ---------------------------------------------------------------------------
# body forms


class Form:
    __slots__ = ()


@dataclass(frozen=True)
class App(Form):
    callee: Term
    args: tuple


@dataclass(frozen=True)
class PrimB(Form):
    expr: PrimExpr
    outs: tuple  # bound names, usually one
    cont_stage: str  # staging parameter of the continuation; may be None
    rest: "Body"


@dataclass(frozen=True)
class FixB(Form):
    stage_param: str
    name: str
    value: Term
    rest: "Body"


@dataclass(frozen=True)
class Inert(Form):
    """Executed host-continuation site: keeps its argument terms rooted in
    the tree so nested bodies continue to evaluate, but never runs again."""

    tag: object
    args: tuple


class Body:
    __slots__ = ("stage", "form")

    def __init__(self, stage, form):
        self.stage = stage
        self.form = form

    def replace(self, other):
        self.stage = other.stage
        self.form = other.form

    def __repr__(self):
        return f"Body({self.stage!r}, {type(self.form).__name__})"


# ---------------------------------------------------------------------------
# stage evaluation

def stage_value(expr):
    """Post-substitution stage evaluation: a surviving SRef is a symbolic
    name, hence bottom."""
    if isinstance(expr, SConst):
        return expr.top
    if isinstance(expr, SRef):
        return False
    if isinstance(expr, SAnd):
        return stage_value(expr.left) and stage_value(expr.right)
    if isinstance(expr, SOr):
        return stage_value(expr.left) or stage_value(expr.right)
    if isinstance(expr, SNot):
        return not stage_value(expr.inner)
    raise TypeError(f"not a stage expression: {expr!r}")


def eval_stage(expr, bindings):
    """Explicit-environment variant used by the public API and tests.

    A name bound to a concrete (non-symbolic) value counts as top; a name
    bound to a symbolic value is bottom; an unbound name is an error.
    """
    if isinstance(expr, SConst):
        return expr.top
    if isinstance(expr, SRef):
        if expr.name not in bindings:
            raise UnboundStageName(expr.name)
        val = bindings[expr.name]
        if isinstance(val, StageConst):
            return val.top
        if isinstance(val, SConst):
            return val.top
        if isinstance(val, Var):
            return False
        if val == "symbolic":
            return False
        return True
    if isinstance(expr, SAnd):
        return eval_stage(expr.left, bindings) and eval_stage(expr.right, bindings)
    if isinstance(expr, SOr):
        return eval_stage(expr.left, bindings) or eval_stage(expr.right, bindings)
    if isinstance(expr, SNot):
        return not eval_stage(expr.inner, bindings)
    raise TypeError(f"not a stage expression: {expr!r}")


def term_to_stage(term):
    """A term landing in stage position: stage constants keep their value,
    a still-symbolic variable stays a reference, any other concrete value
    is top."""
    if isinstance(term, StageConst):
        return SConst(term.top)
    if isinstance(term, Var):
        return SRef(term.name)
    return TOP


# ---------------------------------------------------------------------------
# substitution

def subst_stage(expr, mapping):
    if isinstance(expr, SConst):
        return expr
    if isinstance(expr, SRef):
        if expr.name in mapping:
            return term_to_stage(mapping[expr.name])
        return expr
    if isinstance(expr, SAnd):
        return SAnd(subst_stage(expr.left, mapping), subst_stage(expr.right, mapping))
    if isinstance(expr, SOr):
        return SOr(subst_stage(expr.left, mapping), subst_stage(expr.right, mapping))
    if isinstance(expr, SNot):
        return SNot(subst_stage(expr.inner, mapping))
    raise TypeError(f"not a stage expression: {expr!r}")


def subst_term(term, mapping, names):
    if isinstance(term, Var):
        return mapping.get(term.name, term)
    if isinstance(term, Splice):
        return Splice(subst_term(term.inner, mapping, names))
    if isinstance(term, TupleT):
        return TupleT(tuple(subst_term(t, mapping, names) for t in term.items))
    if isinstance(term, Lam):
        inner = dict(mapping)
        new_params = []
        for p in term.params:
            fresh = names.fresh(p.name)
            inner[p.name] = Var(fresh)
            new_params.append(Param(fresh, p.packed))
        fresh_stage = names.fresh(term.stage)
        inner[term.stage] = Var(fresh_stage)
        return Lam(new_params, fresh_stage, subst_body(term.body, inner, names))
    if isinstance(term, Rec):
        inner = dict(mapping)
        inner.pop(term.name, None)
        return Rec(term.name, subst_term(term.value, inner, names))
    return term


def subst_body(body, mapping, names):
    stage = subst_stage(body.stage, mapping)
    form = body.form
    if isinstance(form, App):
        new = App(
            subst_term(form.callee, mapping, names),
            tuple(subst_term(a, mapping, names) for a in form.args),
        )
    elif isinstance(form, PrimB):
        inner = dict(mapping)
        new_outs = []
        for o in form.outs:
            fresh = names.fresh(o)
            inner[o] = Var(fresh)
            new_outs.append(fresh)
        new_cont = None
        if form.cont_stage is not None:
            new_cont = names.fresh(form.cont_stage)
            inner[form.cont_stage] = Var(new_cont)
        new = PrimB(
            prim_subst(form.expr, mapping, lambda t: subst_term(t, mapping, names)),
            tuple(new_outs),
            new_cont,
            subst_body(form.rest, inner, names),
        )
    elif isinstance(form, FixB):
        inner = dict(mapping)
        fresh_stage = names.fresh(form.stage_param)
        inner[form.stage_param] = Var(fresh_stage)
        fresh_name = names.fresh(form.name)
        inner[form.name] = Var(fresh_name)
        new = FixB(
            fresh_stage,
            fresh_name,
            subst_term(form.value, inner, names),
            subst_body(form.rest, inner, names),
        )
    elif isinstance(form, Inert):
        new = Inert(form.tag, tuple(subst_term(a, mapping, names) for a in form.args))
    else:
        raise TypeError(f"unknown body form: {form!r}")
    return Body(stage, new)


# ---------------------------------------------------------------------------
# traversal

def bodies_in_term(term):
    if isinstance(term, Lam):
        yield term.body
    elif isinstance(term, TupleT):
        for t in term.items:
            yield from bodies_in_term(t)
    elif isinstance(term, Splice):
        yield from bodies_in_term(term.inner)


def child_bodies(body):
    form = body.form
    if isinstance(form, App):
        yield from bodies_in_term(form.callee)
        for a in form.args:
            yield from bodies_in_term(a)
    elif isinstance(form, PrimB):
        for t in form.expr.embedded_terms():
            yield from bodies_in_term(t)
        yield form.rest
    elif isinstance(form, FixB):
        yield from bodies_in_term(form.value)
        yield form.rest
    elif isinstance(form, Inert):
        for a in form.args:
            yield from bodies_in_term(a)


def postorder(body):
    """All bodies reachable from `body`, children before parents."""
    for child in child_bodies(body):
        yield from postorder(child)
    yield body


# ---------------------------------------------------------------------------
# alpha equivalence

def _quote_to_prim(term):
    if isinstance(term, Var):
        return PName(term.name)
    if isinstance(term, Int):
        return PInt(term.value)
    if isinstance(term, Str):
        return PStr(term.value)
    if isinstance(term, TupleT) and not any(isinstance(t, Splice) for t in term.items):
        return PList(tuple(PQuote(t) for t in term.items))
    return None


def alpha_eq(a, b):
    """Structural equality of terms up to renaming of bound names."""
    return _alpha_term(a, b, {}, {})


def alpha_eq_body(a, b):
    return _alpha_body(a, b, {}, {})


def _match_name(na, nb, fwd, bwd):
    if na in fwd:
        return fwd[na] == nb and bwd.get(nb) == na
    if nb in bwd:
        return False
    return na == nb  # free names must agree literally


def _bind_name(na, nb, fwd, bwd):
    fwd = dict(fwd)
    bwd = dict(bwd)
    fwd[na] = nb
    bwd[nb] = na
    return fwd, bwd


def _alpha_stage(a, b, fwd, bwd):
    if type(a) is not type(b):
        return False
    if isinstance(a, SConst):
        return a.top == b.top
    if isinstance(a, SRef):
        return _match_name(a.name, b.name, fwd, bwd)
    if isinstance(a, (SAnd, SOr)):
        return _alpha_stage(a.left, b.left, fwd, bwd) and _alpha_stage(a.right, b.right, fwd, bwd)
    if isinstance(a, SNot):
        return _alpha_stage(a.inner, b.inner, fwd, bwd)
    return False


def _alpha_term(a, b, fwd, bwd):
    if type(a) is not type(b):
        return False
    if isinstance(a, Var):
        return _match_name(a.name, b.name, fwd, bwd)
    if isinstance(a, (Int, Str, Bool)):
        return a.value == b.value
    if isinstance(a, StageConst):
        return a.top == b.top
    if isinstance(a, Builtin):
        return a.name == b.name
    if isinstance(a, Splice):
        return _alpha_term(a.inner, b.inner, fwd, bwd)
    if isinstance(a, TupleT):
        return len(a.items) == len(b.items) and all(
            _alpha_term(x, y, fwd, bwd) for x, y in zip(a.items, b.items)
        )
    if isinstance(a, Lam):
        if len(a.params) != len(b.params):
            return False
        for pa, pb in zip(a.params, b.params):
            if pa.packed != pb.packed:
                return False
            fwd, bwd = _bind_name(pa.name, pb.name, fwd, bwd)
        fwd, bwd = _bind_name(a.stage, b.stage, fwd, bwd)
        return _alpha_body(a.body, b.body, fwd, bwd)
    return a is b  # handles (EnvVal, FragVal, RetK, Rec) compare by identity


def _alpha_body(a, b, fwd, bwd):
    if not _alpha_stage(a.stage, b.stage, fwd, bwd):
        return False
    fa, fb = a.form, b.form
    if type(fa) is not type(fb):
        return False
    if isinstance(fa, App):
        if len(fa.args) != len(fb.args):
            return False
        if not _alpha_term(fa.callee, fb.callee, fwd, bwd):
            return False
        return all(_alpha_term(x, y, fwd, bwd) for x, y in zip(fa.args, fb.args))
    if isinstance(fa, PrimB):
        if len(fa.outs) != len(fb.outs):
            return False
        if (fa.cont_stage is None) != (fb.cont_stage is None):
            return False
        ea = normalize_prim(fa.expr, _quote_to_prim)
        eb = normalize_prim(fb.expr, _quote_to_prim)
        if not prim_alpha_eq(ea, eb, lambda x, y: _match_name(x, y, fwd, bwd),
                             lambda x, y: _alpha_term(x, y, fwd, bwd)):
            return False
        for oa, ob in zip(fa.outs, fb.outs):
            fwd, bwd = _bind_name(oa, ob, fwd, bwd)
        if fa.cont_stage is not None:
            fwd, bwd = _bind_name(fa.cont_stage, fb.cont_stage, fwd, bwd)
        return _alpha_body(fa.rest, fb.rest, fwd, bwd)
    if isinstance(fa, FixB):
        fwd, bwd = _bind_name(fa.stage_param, fb.stage_param, fwd, bwd)
        fwd, bwd = _bind_name(fa.name, fb.name, fwd, bwd)
        return _alpha_term(fa.value, fb.value, fwd, bwd) and _alpha_body(fa.rest, fb.rest, fwd, bwd)
    if isinstance(fa, Inert):
        return len(fa.args) == len(fb.args) and all(
            _alpha_term(x, y, fwd, bwd) for x, y in zip(fa.args, fb.args)
        )
    return False
