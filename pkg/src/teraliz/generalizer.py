"""Property-based tests built from path specifications.

A generalized test re-runs the original unit test with the MUT's
int/bool arguments drawn from the input partition described by the path
condition, and checks the MUT's result against the symbolic outcome.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .analyzer import MutRef
from .concolic import (
    Const,
    ErrorOutcome,
    Param,
    PathSpec,
    SymBinary,
    SymExpr,
    SymUnary,
    ValueOutcome,
    eval_sym,
    from_ast,
    to_ast,
)
from .interp import Budget, Interpreter, OracleFault, Status, run_function_as_test
from .minilang.nodes import (
    ASSERT_TYPES,
    AssertEq,
    AssertThrows,
    Assign,
    Binary,
    Block,
    BoolLit,
    Call,
    FileKind,
    FunctionDecl,
    If,
    IntLit,
    Let,
    Param as AstParam,
    PropertyAnn,
    Return,
    SourceFile,
    StrLit,
    Type,
    Unary,
    Var,
    assertions_of,
    transform,
    walk,
)
from .minilang.ops import INT_MAX, INT_MIN, ErrorKind, RuntimeFault
from .minilang.parser import parse_file
from .minilang.printer import pretty_print, print_expr
from .minilang.program import Program
from .rng import stream

MAX_PREDICATE_CHARS = 65_535
PREDICATE_FN = "satisfies_input_spec"
PARAM_PREFIX = "_p_"
SPECIAL_INTS = (0, 1, -1, INT_MIN, INT_MAX)


class SupplierKind(str, Enum):
    BASELINE = "baseline"
    NAIVE = "naive"
    IMPROVED = "improved"


@dataclass(frozen=True)
class Variant:
    kind: SupplierKind
    tries: int

    def __post_init__(self):
        if self.tries < 1:
            raise ValueError("tries must be at least 1")

    @property
    def name(self) -> str:
        return "baseline" if self.kind is SupplierKind.BASELINE else f"{self.kind.value}_{self.tries}"

    @property
    def effective_tries(self) -> int:
        return 1 if self.kind is SupplierKind.BASELINE else self.tries

    @classmethod
    def baseline(cls) -> Variant:
        return cls(SupplierKind.BASELINE, 1)

    @classmethod
    def parse(cls, name: str) -> Variant:
        if name == "baseline":
            return cls.baseline()
        kind, _, tries = name.partition("_")
        return cls(SupplierKind(kind), int(tries))


@dataclass(frozen=True)
class GenConfig:
    discard_ratio: int = 5
    edge_bias: float = 0.25
    edge_enum_cap: int = 64


class SpecTooLarge(Exception):
    pass


class InfeasibleDraw(Exception):
    """The partial assignment leaves no admissible value for some parameter."""


# -- constraint encoding --------------------------------------------------------


@dataclass(frozen=True)
class Term:
    """A bound or equality operand: a constant or an earlier parameter, plus an offset."""

    ref: int | None = None
    value: int | bool | None = None
    offset: int = 0

    def resolve(self, assignment: dict):
        base = self.value if self.ref is None else assignment[self.ref]
        if self.offset == 0:
            return base
        shifted = base + self.offset
        # A strict bound past the type extreme admits nothing.
        if shifted < INT_MIN or shifted > INT_MAX:
            raise InfeasibleDraw(f"bound {shifted} outside int range")
        return shifted

    def describe(self, names: dict[int, str]) -> str:
        base = repr(self.value) if self.ref is None else names[self.ref]
        if self.offset:
            return f"{base} {'+' if self.offset > 0 else '-'} {abs(self.offset)}"
        return base


@dataclass
class ParamPlan:
    param: Param
    eq: list[Term] = field(default_factory=list)
    lower: list[Term] = field(default_factory=list)
    upper: list[Term] = field(default_factory=list)

    @property
    def bounded(self) -> bool:
        return bool(self.lower or self.upper)

    def bounds(self, assignment: dict) -> tuple[int, int]:
        lo = max((t.resolve(assignment) for t in self.lower), default=INT_MIN)
        hi = min((t.resolve(assignment) for t in self.upper), default=INT_MAX)
        if lo > hi:
            raise InfeasibleDraw(f"{self.param.name}: lower {lo} > upper {hi}")
        return lo, hi

    def admits(self, v, assignment: dict) -> bool:
        """Whether ``v`` satisfies every encoded conjunct attached to this parameter."""
        if any(t.resolve(assignment) != v for t in self.eq):
            return False
        if self.param.type is Type.BOOL:
            return True
        lo, hi = self.bounds(assignment)
        return lo <= v <= hi


@dataclass
class EncodedPlan:
    params: tuple[ParamPlan, ...]
    encoded: tuple[SymExpr, ...]
    residual: tuple[SymExpr, ...]

    def plan_for(self, index: int) -> ParamPlan:
        for pp in self.params:
            if pp.param.index == index:
                return pp
        raise KeyError(index)


_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "==": "=="}
_ENCODABLE = frozenset(_FLIP)


def build_plan(spec: PathSpec) -> EncodedPlan:
    """Attach each encodable conjunct to the later-generated parameter it mentions."""
    plans = [ParamPlan(p) for p in spec.symbolic_params]
    position = {p.index: i for i, p in enumerate(spec.symbolic_params)}
    encoded, residual = [], []
    for c in spec.pc:
        placed = _encode(c, position, plans)
        (encoded if placed else residual).append(c)
    return EncodedPlan(tuple(plans), tuple(encoded), tuple(residual))


def _encode(c: SymExpr, position: dict[int, int], plans: list[ParamPlan]) -> bool:
    if not (isinstance(c, SymBinary) and c.op in _ENCODABLE):
        return False
    left, right, op = c.left, c.right, c.op
    if not all(isinstance(s, (Param, Const)) for s in (left, right)):
        return False
    if isinstance(left, Const) and isinstance(right, Const):
        return False
    if isinstance(left, Param) and isinstance(right, Param) and left.index == right.index:
        return False
    # Orient as "target op other" with target the later-generated parameter.
    if isinstance(left, Const) or (
        isinstance(right, Param) and position[right.index] > position[left.index]
    ):
        left, right, op = right, left, _FLIP[op]
    target = plans[position[left.index]]
    other = Term(ref=right.index) if isinstance(right, Param) else Term(value=right.value)
    if op == "==":
        target.eq.append(other)
        return True
    if target.param.type is not Type.INT:
        return False
    if op == "<":
        target.upper.append(_shift(other, -1))
    elif op == "<=":
        target.upper.append(other)
    elif op == ">":
        target.lower.append(_shift(other, 1))
    else:
        target.lower.append(other)
    return True


def _shift(t: Term, by: int) -> Term:
    return Term(ref=t.ref, value=t.value, offset=t.offset + by)


# -- candidate generation --------------------------------------------------------


def _stratified_int(rng: np.random.Generator) -> int:
    if rng.random() < 0.25:
        return SPECIAL_INTS[int(rng.integers(len(SPECIAL_INTS)))]
    return int(rng.integers(INT_MIN, INT_MAX, endpoint=True))


def _random_bool(rng: np.random.Generator) -> bool:
    return bool(rng.random() < 0.5)


def _dedup(values) -> list:
    out = []
    for v in values:
        if v not in out:
            out.append(v)
    return out


class Supplier:
    """Candidate input tuples for one generalized test, step by step.

    Step 0 is always the seed. Baseline stops there. Improved enumerates
    partition-edge combinations next and then draws per the encoded plan;
    Naive draws every parameter from its whole type domain.
    """

    def __init__(
        self,
        spec: PathSpec,
        kind: SupplierKind,
        rng: np.random.Generator,
        config: GenConfig = GenConfig(),
        plan: EncodedPlan | None = None,
    ):
        self.spec = spec
        self.kind = kind
        self.rng = rng
        self.config = config
        self.plan = plan if plan is not None else build_plan(spec)
        self._edges: list[tuple] | None = None

    def candidate(self, step: int) -> tuple | None:
        """Tuple for ``step``; ``None`` when the supplier has no more candidates."""
        if step == 0:
            return self.spec.seed
        if self.kind is SupplierKind.BASELINE:
            return None
        if self.kind is SupplierKind.NAIVE:
            return tuple(
                _random_bool(self.rng) if p.type is Type.BOOL else _stratified_int(self.rng)
                for p in self.spec.symbolic_params
            )
        edges = self.edges()
        if step <= len(edges):
            return edges[step - 1]
        return self._improved_draw()

    def edges(self) -> list[tuple]:
        if self._edges is None:
            self._edges = self._enumerate_edges()
        return self._edges

    def _edge_values(self, pp: ParamPlan, assignment: dict) -> list:
        try:
            if pp.eq:
                values = [pp.eq[0].resolve(assignment)]
            elif pp.param.type is Type.BOOL:
                values = [False, True]
            elif not pp.bounded:
                values = [0, 1, -1]
            else:
                lo, hi = pp.bounds(assignment)
                values = [v for v in _dedup([lo, lo + 1, hi - 1, hi]) if lo <= v <= hi]
            return [v for v in values if pp.admits(v, assignment)]
        except InfeasibleDraw:
            return []

    def _enumerate_edges(self) -> list[tuple]:
        cap = self.config.edge_enum_cap
        plans = self.plan.params
        out: list[tuple] = []
        assignment: dict = {}
        chosen: list = []

        def dfs(pos: int) -> None:
            if pos == len(plans):
                out.append(tuple(chosen))
                return
            pp = plans[pos]
            for v in self._edge_values(pp, assignment):
                if len(out) >= cap:
                    return
                assignment[pp.param.index] = v
                chosen.append(v)
                dfs(pos + 1)
                chosen.pop()
                del assignment[pp.param.index]

        dfs(0)
        return out

    def _improved_draw(self) -> tuple:
        rng = self.rng
        assignment: dict = {}
        for pp in self.plan.params:
            if pp.eq:
                v = pp.eq[0].resolve(assignment)
            elif pp.param.type is Type.BOOL:
                v = _random_bool(rng)
            elif pp.bounded:
                lo, hi = pp.bounds(assignment)
                if rng.random() < self.config.edge_bias:
                    v = lo if rng.random() < 0.5 else hi
                else:
                    v = int(rng.integers(lo, hi, endpoint=True))
            else:
                v = _stratified_int(rng)
            if not pp.admits(v, assignment):
                raise InfeasibleDraw(f"{pp.param.name}={v} conflicts with its encoded constraints")
            assignment[pp.param.index] = v
        return tuple(assignment[p.index] for p in self.spec.symbolic_params)


def satisfies_input_spec(spec: PathSpec, values: Sequence) -> bool:
    """True iff every conjunct evaluates to true; evaluation errors count as false."""
    return spec.satisfied_by(dict(zip(spec.param_indices, values)))


@dataclass
class Draws:
    """Accepted tuples in execution order, with the misses preceding each."""

    tuples: list[tuple]
    misses_before: list[int]
    misses: int
    exhausted: bool


def draw_inputs(
    spec: PathSpec,
    variant: Variant,
    rng: np.random.Generator,
    config: GenConfig = GenConfig(),
    plan: EncodedPlan | None = None,
) -> Draws:
    """Generate and filter candidates until ``tries`` are accepted or the miss budget runs out.

    Generation never looks at execution results, so the accepted sequence is
    the same for the original program and every mutant.
    """
    supplier = Supplier(spec, variant.kind, rng, config, plan)
    budget = variant.effective_tries * config.discard_ratio
    tuples: list[tuple] = []
    before: list[int] = []
    misses = 0
    step = 0
    while len(tuples) < variant.effective_tries:
        if misses >= budget:
            return Draws(tuples, before, misses, True)
        try:
            cand = supplier.candidate(step)
        except InfeasibleDraw:
            cand = False
        step += 1
        if cand is None:
            return Draws(tuples, before, misses, True)
        if cand is False or not satisfies_input_spec(spec, cand):
            misses += 1
            continue
        tuples.append(cand)
        before.append(misses)
    return Draws(tuples, before, misses, False)


# -- generalized tests ---------------------------------------------------------------


@dataclass(frozen=True)
class GeneralizedTest:
    variant: Variant
    assertion_id: str
    test: str
    spec: PathSpec
    source: SourceFile
    property_name: str
    oracle_name: str | None
    rng_seed: int = 0
    native_oracle: bool = True

    @property
    def id(self) -> str:
        return f"{self.variant.name}/{self.assertion_id}"

    @property
    def kind(self) -> SupplierKind:
        return self.variant.kind

    @property
    def tries(self) -> int:
        return self.variant.tries

    @property
    def seed_inputs(self) -> tuple:
        return self.spec.seed

    def rng(self) -> np.random.Generator:
        return stream(self.rng_seed, self.id)

    @property
    def property_fn(self) -> FunctionDecl:
        return self.source.function(self.property_name)


def property_name(assertion_id: str) -> str:
    test, _, k = assertion_id.rpartition("#")
    return f"{test}__{k}"


def generalized_path(variant: Variant, assertion_id: str) -> str:
    return f"generalized/{variant.name}/{property_name(assertion_id)}.ml"


def _pvar(p: Param) -> Var:
    return Var(PARAM_PREFIX + p.name)


def _sym_ast(e: SymExpr):
    """Symbolic expression as MiniLang over the ``_p_`` property parameters."""
    if isinstance(e, Param):
        return Var(PARAM_PREFIX + e.name)
    if isinstance(e, Const):
        return to_ast(e)
    if isinstance(e, SymUnary):
        return Unary(e.op, _sym_ast(e.operand))
    return Binary(e.op, _sym_ast(e.left), _sym_ast(e.right))


def _literal(v):
    if isinstance(v, bool):
        return BoolLit(v)
    if isinstance(v, int):
        return IntLit(v)
    return StrLit(v)


def _type_of(v) -> Type:
    if isinstance(v, bool):
        return Type.BOOL
    if isinstance(v, int):
        return Type.INT
    return Type.STR


def predicate_source(spec: PathSpec) -> str:
    if not spec.pc:
        return "true"
    return " && ".join(print_expr(_sym_ast(c)) for c in spec.pc)


def _conjunction(spec: PathSpec):
    if not spec.pc:
        return BoolLit(True)
    expr = _sym_ast(spec.pc[0])
    for c in spec.pc[1:]:
        expr = Binary("&&", expr, _sym_ast(c))
    return expr


def _transform_test(
    test_fn: FunctionDecl,
    k: int,
    mut: MutRef,
    spec: PathSpec,
    oracle: str | None,
    name: str,
    variant: Variant,
) -> FunctionDecl:
    target = assertions_of(test_fn)[k]
    params = spec.symbolic_params
    by_index = {p.index: p for p in params}
    oracle_call = None if oracle is None else Call(oracle, tuple(_pvar(p) for p in params))

    def rewrite(n):
        if isinstance(n, Call) and n.span == mut.call_span:
            args = tuple(_pvar(by_index[i]) if i in by_index else a for i, a in enumerate(n.args))
            return Call(n.name, args)
        if isinstance(n, ASSERT_TYPES):
            if n.span != target.span:
                return None
            if isinstance(n, AssertThrows):
                return AssertThrows(n.body, spec.outcome.kind.value)
            actual = n.actual if isinstance(n, AssertEq) else n.expr
            return AssertEq(oracle_call, actual)
        return n

    body = transform(test_fn.body, rewrite)
    return FunctionDecl(
        name,
        tuple(AstParam(PARAM_PREFIX + p.name, p.type) for p in params),
        Type.VOID,
        body,
        (PropertyAnn(variant.kind.value, variant.effective_tries),),
    )


def _referenced_helpers(program: Program, file: str, roots: Sequence[FunctionDecl]) -> list[FunctionDecl]:
    sf = program.file(file)
    local = {fn.name: fn for fn in sf.functions if fn.annotation is None}
    seen: list[str] = []
    stack = list(roots)
    while stack:
        fn = stack.pop()
        for n in walk(fn.body):
            if isinstance(n, Call) and n.name in local and n.name not in seen:
                seen.append(n.name)
                stack.append(local[n.name])
    return [fn for fn in sf.functions if fn.name in seen]


def _bound_function(name: str, pp: ParamPlan, earlier: Sequence[Param], terms: list[Term], pick: str) -> FunctionDecl:
    """``lower_x``/``upper_x``: the resolved inclusive bound, as MiniLang."""
    extreme = INT_MIN if pick == ">" else INT_MAX
    stmts: list = [Let("bound", IntLit(extreme))]
    for j, t in enumerate(terms):
        tv = f"t{j}"
        base = IntLit(t.value) if t.ref is None else Var(PARAM_PREFIX + _name_of(earlier, t.ref))
        stmts.append(Let(tv, base))
        if t.offset:
            guard = INT_MAX if t.offset > 0 else INT_MIN
            step = Binary("+" if t.offset > 0 else "-", Var(tv), IntLit(abs(t.offset)))
            stmts.append(If(Binary("!=", Var(tv), IntLit(guard)), Block((Assign(tv, step),))))
        stmts.append(If(Binary(pick, Var(tv), Var("bound")), Block((Assign("bound", Var(tv)),))))
    stmts.append(Return(Var("bound")))
    params = tuple(AstParam(PARAM_PREFIX + p.name, p.type) for p in earlier)
    return FunctionDecl(name, params, Type.INT, Block(tuple(stmts)))


def _name_of(params: Sequence[Param], index: int) -> str:
    for p in params:
        if p.index == index:
            return p.name
    raise KeyError(index)


def _supplier_functions(plan: EncodedPlan) -> list[FunctionDecl]:
    out = []
    earlier: list[Param] = []
    for pp in plan.params:
        name = pp.param.name
        params = tuple(AstParam(PARAM_PREFIX + p.name, p.type) for p in earlier)
        if pp.eq:
            t = pp.eq[0]
            value = _literal(t.value) if t.ref is None else Var(PARAM_PREFIX + _name_of(earlier, t.ref))
            out.append(FunctionDecl(f"supply_eq_{name}", params, pp.param.type, Block((Return(value),))))
        elif pp.bounded:
            out.append(_bound_function(f"supply_lower_{name}", pp, earlier, pp.lower, ">"))
            out.append(_bound_function(f"supply_upper_{name}", pp, earlier, pp.upper, "<"))
        earlier.append(pp.param)
    return out


def emit_generalized_source(
    program: Program, mut: MutRef, spec: PathSpec, variant: Variant, k: int | None = None
) -> SourceFile:
    """Standalone test file holding the property, its oracle, input predicate and seed."""
    if len(predicate_source(spec)) > MAX_PREDICATE_CHARS:
        raise SpecTooLarge(f"input predicate exceeds {MAX_PREDICATE_CHARS} characters")
    test_fn, file = program.test(mut.test)
    if k is None:
        k = int(mut.assertion_id.rpartition("#")[2])
    mut_fn = program.impl_function(mut.fn_name)
    params = spec.symbolic_params
    ast_params = tuple(AstParam(PARAM_PREFIX + p.name, p.type) for p in params)
    oracle = None
    functions: list[FunctionDecl] = []
    name = property_name(mut.assertion_id)
    if isinstance(spec.outcome, ValueOutcome):
        oracle = f"{mut.fn_name}_expected"
        oracle_fn = FunctionDecl(oracle, ast_params, mut_fn.return_type, Block((Return(_sym_ast(spec.outcome.expr)),)))
    prop = _transform_test(test_fn, k, mut, spec, oracle, name, variant)
    functions.append(prop)
    if oracle is not None:
        functions.append(oracle_fn)
    functions.append(FunctionDecl(PREDICATE_FN, ast_params, Type.BOOL, Block((Return(_conjunction(spec)),))))
    for p, value in zip(mut_fn.params, spec.concrete_inputs):
        functions.append(FunctionDecl(f"seed_{p.name}", (), _type_of(value), Block((Return(_literal(value)),))))
    if variant.kind is SupplierKind.IMPROVED:
        functions.extend(_supplier_functions(build_plan(spec)))
    functions.extend(_referenced_helpers(program, file, [prop]))
    sf = SourceFile(generalized_path(variant, mut.assertion_id), tuple(functions), FileKind.TEST)
    # Re-parse so every node carries real spans from the emitted text.
    return parse_file(pretty_print(sf), FileKind.TEST, sf.path, externs=program.impl_files)


def create_generalized_test(
    program: Program, mut: MutRef, spec: PathSpec, variant: Variant, rng_seed: int = 0
) -> GeneralizedTest:
    source = emit_generalized_source(program, mut, spec, variant)
    oracle = f"{mut.fn_name}_expected" if isinstance(spec.outcome, ValueOutcome) else None
    return GeneralizedTest(
        variant, mut.assertion_id, mut.test, spec, source, property_name(mut.assertion_id), oracle, rng_seed
    )


def load_generalized(program: Program, sf: SourceFile, rng_seed: int = 0) -> GeneralizedTest:
    """Rebuild a generalized test from an emitted file (file-driven mode)."""
    props = [fn for fn in sf.functions if fn.is_property]
    if len(props) != 1:
        raise ValueError(f"{sf.path}: expected exactly one property function")
    prop = props[0]
    ann = prop.annotation
    kind = SupplierKind(ann.supplier)
    variant = Variant.baseline() if kind is SupplierKind.BASELINE else Variant(kind, ann.tries)
    test, _, k = prop.name.rpartition("__")
    aid = f"{test}#{k}"
    pnames = {p.name for p in prop.params}

    mut_call = next(
        n
        for n in walk(prop.body)
        if isinstance(n, Call)
        and sf.function(n.name) is None
        and any(isinstance(a, Var) and a.name in pnames for a in n.args)
    )
    mut_fn = program.impl_function(mut_call.name)
    params = tuple(
        Param(i, mut_fn.params[i].name, mut_fn.params[i].type)
        for i, a in enumerate(mut_call.args)
        if isinstance(a, Var) and a.name in pnames
    )
    by_var = {PARAM_PREFIX + p.name: p for p in params}

    pred = sf.function(PREDICATE_FN).body.stmts[-1].value
    pc = tuple(from_ast(c, by_var) for c in _split_conjunction(pred))
    target = assertions_of(prop)[0]
    oracle = None
    if isinstance(target, AssertThrows):
        outcome = ErrorOutcome(ErrorKind(target.kind))
    else:
        oracle = target.expected.name
        outcome = ValueOutcome(from_ast(sf.function(oracle).body.stmts[-1].value, by_var))
    seeds = tuple(sf.function(f"seed_{p.name}").body.stmts[-1].value.value for p in mut_fn.params)
    if isinstance(outcome, ErrorOutcome):
        concrete = outcome.kind
    else:
        concrete = eval_sym(outcome.expr, {p.index: seeds[p.index] for p in params})
    spec = PathSpec(mut_fn.name, seeds, params, pc, outcome, concrete)
    return GeneralizedTest(variant, aid, test, spec, sf, prop.name, oracle, rng_seed, native_oracle=False)


def _split_conjunction(e) -> list:
    if isinstance(e, BoolLit) and e.value is True:
        return []
    out = []
    while isinstance(e, Binary) and e.op == "&&":
        out.append(e.right)
        e = e.left
    out.append(e)
    return out[::-1]


# -- execution ---------------------------------------------------------------------


class PropertyStatus(str, Enum):
    PASSED = "Passed"
    FAILED = "Failed"
    TOO_MANY_FILTER_MISSES = "TooManyFilterMisses"
    ERRORED = "Errored"


@dataclass(frozen=True)
class TupleResult:
    status: str  # "pass" | "fail" | "error"
    error: str | None = None
    steps: int = 0
    covered: frozenset = frozenset()
    expected: object = None
    actual: object = None


@dataclass
class PropertyOutcome:
    status: PropertyStatus
    tried: int
    misses: int
    counterexample: tuple | None = None
    shrunk: tuple | None = None
    error: str | None = None
    expected: object = None
    actual: object = None

    def to_json(self) -> dict:
        return {
            "outcome": self.status.value,
            "tried": self.tried,
            "misses": self.misses,
            "counterexample": None if self.counterexample is None else list(self.counterexample),
            "shrunk": None if self.shrunk is None else list(self.shrunk),
            "error": self.error,
        }


class PropertyExecutor:
    """Runs the transformed test of ``gt`` against ``program`` for given input tuples."""

    def __init__(self, program: Program, gt: GeneralizedTest):
        self.gt = gt
        self.program = program.with_file(gt.source)
        self.fn = gt.property_fn
        self.natives: dict[str, Callable] = {}
        if gt.native_oracle and gt.oracle_name is not None:
            expr = gt.spec.outcome.expr
            indices = gt.spec.param_indices

            def oracle(args, _expr=expr, _idx=indices):
                try:
                    return eval_sym(_expr, dict(zip(_idx, args)))
                except RuntimeFault as fault:
                    raise OracleFault(fault) from None

            self.natives[gt.oracle_name] = oracle
        self.oracle_names = () if gt.oracle_name is None else (gt.oracle_name,)

    def run(self, values: Sequence, budget: Budget = Budget()) -> TupleResult:
        interp = Interpreter(self.program, budget, natives=self.natives, oracle_names=self.oracle_names)
        try:
            out = run_function_as_test(interp, self.fn, self.gt.source.path, list(values))
        except OracleFault as fault:
            return TupleResult("error", f"oracle {fault.fault.kind.value}", interp.steps, frozenset(interp.covered))
        if out.status is Status.PASSED:
            return TupleResult("pass", None, out.steps, out.covered)
        if out.status is Status.FAILED:
            return TupleResult("fail", None, out.steps, out.covered, out.expected, out.actual)
        if out.error.catchable:
            return TupleResult("fail", out.error.value, out.steps, out.covered)
        return TupleResult("error", out.error.value, out.steps, out.covered)


def shrink(spec: PathSpec, failing: Sequence, still_fails: Callable[[tuple], bool]) -> tuple:
    """Coordinate-wise binary search toward zero, repeated to a fixpoint.

    A candidate is accepted only if it satisfies the full input spec and
    still fails.
    """
    current = list(failing)

    def ok(cand: list) -> bool:
        t = tuple(cand)
        return satisfies_input_spec(spec, t) and still_fails(t)

    changed = True
    while changed:
        changed = False
        for i, v in enumerate(current):
            if v is True:
                trial = current[:i] + [False] + current[i + 1 :]
                if ok(trial):
                    current = trial
                    changed = True
                continue
            if isinstance(v, bool) or v == 0:
                continue
            sign = 1 if v > 0 else -1
            lo, hi = 0, abs(v)
            while lo < hi:
                mid = (lo + hi) // 2
                trial = current[:i] + [sign * mid] + current[i + 1 :]
                if ok(trial):
                    hi = mid
                else:
                    lo = mid + 1
            if hi != abs(v):
                current[i] = sign * hi
                changed = True
    return tuple(current)


def run_property(
    program: Program,
    gt: GeneralizedTest,
    config: GenConfig = GenConfig(),
    budget: Budget = Budget(),
    *,
    draws: Draws | None = None,
    budgets: Sequence[Budget] | None = None,
    do_shrink: bool = True,
    record: list | None = None,
) -> PropertyOutcome:
    """Execute a generalized test.

    ``draws`` lets callers reuse a precomputed input sequence, ``budgets``
    gives one budget per tuple and ``record`` collects each tuple's
    :class:`TupleResult`.
    """
    if draws is None:
        draws = draw_inputs(gt.spec, gt.variant, gt.rng(), config)
    executor = PropertyExecutor(program, gt)
    for i, values in enumerate(draws.tuples):
        result = executor.run(values, budgets[i] if budgets is not None else budget)
        if record is not None:
            record.append(result)
        if result.status == "pass":
            continue
        misses = draws.misses_before[i]
        if result.status == "error":
            return PropertyOutcome(PropertyStatus.ERRORED, i + 1, misses, tuple(values), error=result.error)
        shrunk = tuple(values)
        if do_shrink:
            shrunk = shrink(gt.spec, values, lambda t: executor.run(t, budget).status == "fail")
        return PropertyOutcome(
            PropertyStatus.FAILED,
            i + 1,
            misses,
            tuple(values),
            shrunk,
            error=result.error,
            expected=result.expected,
            actual=result.actual,
        )
    status = PropertyStatus.TOO_MANY_FILTER_MISSES if draws.exhausted else PropertyStatus.PASSED
    return PropertyOutcome(status, len(draws.tuples), draws.misses)
