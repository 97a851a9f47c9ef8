"""Direct-sum decompositions of the system space and families of initial states.

A family is declared by a :class:`FamilySpec`: a partition of the system basis
into blocks, where each block either carries a fixed correlated joint state on
(block x environment) or is a free product block with a fixed environment
state. A :class:`FamilyMember` supplies the variable data (block weights and
the free blocks' system states) selecting one joint state from the family.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Union

import numpy as np

from .linalg import (
    as_matrix,
    matrix_from_json,
    matrix_to_json,
    partial_trace_env,
    random_density,
    tensor_product,
    validate_density,
    vector_from_json,
)

WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class DirectSumDecomposition:
    """Ordered partition of the system basis into subspace blocks.

    ``blocks[alpha]`` holds the global (0-based) computational-basis indices
    spanning the alpha-th subspace; the index sets need not be contiguous but
    must partition ``range(dim_s)``.
    """

    dim_s: int
    dim_e: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.dim_s < 1 or self.dim_e < 1:
            raise ValueError("system and environment dimensions must be >= 1")
        if not self.blocks:
            raise ValueError("decomposition needs at least one block")
        object.__setattr__(self, "blocks", tuple(tuple(int(i) for i in b) for b in self.blocks))
        seen: set[int] = set()
        for alpha, block in enumerate(self.blocks):
            if not block:
                raise ValueError(f"block {alpha} is empty")
            for i in block:
                if i < 0 or i >= self.dim_s:
                    raise ValueError(f"block {alpha} contains out-of-range basis index {i}")
                if i in seen:
                    raise ValueError(f"basis index {i} appears in more than one block")
                seen.add(i)
        if len(seen) != self.dim_s:
            missing = sorted(set(range(self.dim_s)) - seen)
            raise ValueError(f"blocks do not cover basis indices {missing}")

    @property
    def block_count(self) -> int:
        return len(self.blocks)

    def block_dim(self, alpha: int) -> int:
        return len(self.blocks[alpha])

    def projector(self, alpha: int) -> np.ndarray:
        """The dim_s x dim_s orthogonal projector onto block ``alpha``."""
        p = np.zeros((self.dim_s, self.dim_s), dtype=np.complex128)
        for i in self.blocks[alpha]:
            p[i, i] = 1.0
        return p

    def joint_indices(self, alpha: int) -> list[int]:
        """Joint (system-slow) indices of the block x environment subspace."""
        return [i * self.dim_e + e for i in self.blocks[alpha] for e in range(self.dim_e)]


@dataclass(frozen=True)
class FreeProduct:
    """Block whose joint state is (variable system state) x (fixed env state)."""

    rho_e: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rho_e", as_matrix(self.rho_e))


@dataclass(frozen=True)
class FixedCorrelated:
    """Block carrying a fixed joint state, stored in the block-local basis.

    ``rho_se`` is (d*M)x(d*M) where d is the block dimension; keeping it
    block-local makes support leakage outside the block impossible.
    """

    rho_se: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rho_se", as_matrix(self.rho_se))


BlockSpec = Union[FreeProduct, FixedCorrelated]


@dataclass(frozen=True)
class FamilySpec:
    """A family of initial joint states over a direct-sum decomposition."""

    decomposition: DirectSumDecomposition
    block_specs: tuple[BlockSpec, ...]

    def __post_init__(self):
        dec = self.decomposition
        object.__setattr__(self, "block_specs", tuple(self.block_specs))
        if len(self.block_specs) != dec.block_count:
            raise ValueError(
                f"expected {dec.block_count} block specs, got {len(self.block_specs)}"
            )
        m = dec.dim_e
        for alpha, bs in enumerate(self.block_specs):
            d = dec.block_dim(alpha)
            if isinstance(bs, FreeProduct):
                if bs.rho_e.shape != (m, m):
                    raise ValueError(
                        f"block {alpha}: environment state must be {m}x{m}, got {bs.rho_e.shape}"
                    )
                validate_density(bs.rho_e, f"block {alpha} environment state")
            elif isinstance(bs, FixedCorrelated):
                dm = d * m
                if bs.rho_se.shape != (dm, dm):
                    raise ValueError(
                        f"block {alpha}: fixed joint state must be {dm}x{dm}, got {bs.rho_se.shape}"
                    )
                validate_density(bs.rho_se, f"block {alpha} fixed joint state")
            else:
                raise ValueError(f"block {alpha}: unknown block spec {type(bs).__name__}")

    @property
    def fixed_blocks(self) -> list[int]:
        return [a for a, b in enumerate(self.block_specs) if isinstance(b, FixedCorrelated)]

    @property
    def free_blocks(self) -> list[int]:
        return [a for a, b in enumerate(self.block_specs) if isinstance(b, FreeProduct)]


@dataclass(frozen=True)
class FamilyMember:
    """Variable family data: block weights and the free blocks' system states."""

    weights: np.ndarray
    free_states: dict[int, np.ndarray]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        object.__setattr__(
            self, "free_states", {int(a): as_matrix(m) for a, m in self.free_states.items()}
        )


def validate_member(spec: FamilySpec, member: FamilyMember) -> None:
    """Raise if ``member`` is not valid variable data for ``spec``."""
    dec = spec.decomposition
    w = member.weights
    if w.shape != (dec.block_count,):
        raise ValueError(f"expected {dec.block_count} weights, got shape {w.shape}")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
        raise ValueError(f"weights sum to {w.sum():.15g}, expected 1")
    free = set(spec.free_blocks)
    if set(member.free_states) != free:
        raise ValueError(
            f"free states given for blocks {sorted(member.free_states)}, expected {sorted(free)}"
        )
    for alpha in sorted(free):
        d = dec.block_dim(alpha)
        rho = member.free_states[alpha]
        if rho.shape != (d, d):
            raise ValueError(f"block {alpha}: free state must be {d}x{d}, got {rho.shape}")
        validate_density(rho, f"block {alpha} free state")


def embed_block_operator(dec: DirectSumDecomposition, alpha: int, op: np.ndarray) -> np.ndarray:
    """Lift a block-local operator into the full system (or joint) space.

    A d x d operator lands on the block's rows/columns of a dim_s x dim_s
    matrix; a (d*M) x (d*M) operator lands on the corresponding joint indices
    of a (dim_s*M) x (dim_s*M) matrix.
    """
    if alpha < 0 or alpha >= dec.block_count:
        raise ValueError(f"invalid block index {alpha}")
    op = as_matrix(op)
    d = dec.block_dim(alpha)
    m = dec.dim_e
    if op.shape == (d, d):
        idx = list(dec.blocks[alpha])
        out = np.zeros((dec.dim_s, dec.dim_s), dtype=np.complex128)
    elif op.shape == (d * m, d * m):
        idx = dec.joint_indices(alpha)
        n = dec.dim_s * m
        out = np.zeros((n, n), dtype=np.complex128)
    else:
        raise ValueError(
            f"operator shape {op.shape} matches neither {d}x{d} nor {d * m}x{d * m}"
        )
    out[np.ix_(idx, idx)] = op
    return out


def embed_block_vector(dec: DirectSumDecomposition, alpha: int, vec: np.ndarray) -> np.ndarray:
    """Lift a block-local joint ket of length d*M into the full joint space."""
    vec = np.asarray(vec, dtype=np.complex128)
    d = dec.block_dim(alpha)
    m = dec.dim_e
    if vec.shape != (d * m,):
        raise ValueError(f"vector length {vec.shape} does not match block joint dim {d * m}")
    out = np.zeros(dec.dim_s * m, dtype=np.complex128)
    out[dec.joint_indices(alpha)] = vec
    return out


def assemble_initial_state(spec: FamilySpec, member: FamilyMember) -> np.ndarray:
    """The joint initial state selected by ``member``: a (N*M)x(N*M) density operator.

    Fixed blocks contribute p_alpha * (embedded fixed joint state); free blocks
    contribute p_alpha * (free system state x fixed environment state).
    """
    validate_member(spec, member)
    dec = spec.decomposition
    n = dec.dim_s * dec.dim_e
    rho = np.zeros((n, n), dtype=np.complex128)
    for alpha, bs in enumerate(spec.block_specs):
        p = member.weights[alpha]
        if isinstance(bs, FixedCorrelated):
            rho += p * embed_block_operator(dec, alpha, bs.rho_se)
        else:
            local = tensor_product(member.free_states[alpha], bs.rho_e)
            rho += p * embed_block_operator(dec, alpha, local)
    return rho


def reduced_member_state(spec: FamilySpec, member: FamilyMember) -> np.ndarray:
    """The system marginal of the member's joint state, built from family data.

    Equals ``partial_trace_env(assemble_initial_state(spec, member))``.
    """
    validate_member(spec, member)
    dec = spec.decomposition
    rho = np.zeros((dec.dim_s, dec.dim_s), dtype=np.complex128)
    for alpha, bs in enumerate(spec.block_specs):
        p = member.weights[alpha]
        if isinstance(bs, FixedCorrelated):
            local = partial_trace_env(bs.rho_se, dec.block_dim(alpha), dec.dim_e)
        else:
            local = member.free_states[alpha]
        rho += p * embed_block_operator(dec, alpha, local)
    return rho


def block_weight_of(dec: DirectSumDecomposition, alpha: int, rho_s: np.ndarray) -> float:
    """Tr(Pi_alpha rho_s): the weight a system state puts on block ``alpha``."""
    if alpha < 0 or alpha >= dec.block_count:
        raise ValueError(f"invalid block index {alpha}")
    rho_s = as_matrix(rho_s)
    if rho_s.shape != (dec.dim_s, dec.dim_s):
        raise ValueError(f"system state must be {dec.dim_s}x{dec.dim_s}, got {rho_s.shape}")
    return float(sum(rho_s[i, i].real for i in dec.blocks[alpha]))


def sample_family_member(spec: FamilySpec, seed) -> FamilyMember:
    """Uniformly random member: Dirichlet(1,..,1) weights, Ginibre free states."""
    rng = np.random.default_rng(seed)
    dec = spec.decomposition
    weights = rng.dirichlet(np.ones(dec.block_count))
    free_states = {
        alpha: random_density(dec.block_dim(alpha), rng) for alpha in spec.free_blocks
    }
    return FamilyMember(weights=weights, free_states=free_states)


def mix_members(spec: FamilySpec, a: FamilyMember, b: FamilyMember, t: float) -> FamilyMember:
    """Convex mixture t*a + (1-t)*b, expressed again as a member of the family."""
    validate_member(spec, a)
    validate_member(spec, b)
    if not 0.0 <= t <= 1.0:
        raise ValueError("mixing parameter must lie in [0, 1]")
    weights = t * a.weights + (1 - t) * b.weights
    free_states = {}
    for alpha in spec.free_blocks:
        p = weights[alpha]
        if p <= 0:
            free_states[alpha] = a.free_states[alpha]
            continue
        blended = (
            t * a.weights[alpha] * a.free_states[alpha]
            + (1 - t) * b.weights[alpha] * b.free_states[alpha]
        )
        free_states[alpha] = blended / p
    return FamilyMember(weights=weights, free_states=free_states)


def _pure(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=np.complex128)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def _basis_ket(dim: int, k: int) -> np.ndarray:
    v = np.zeros(dim, dtype=np.complex128)
    v[k] = 1.0
    return v


def make_historical_family(kind: str, **params) -> FamilySpec:
    """Construct one of the previously studied families as a FamilySpec.

    Kinds:
      - ``product``: single block covering the whole system; params ``dim_s``
        and ``rho_e``.
      - ``zero-discord``: all blocks one-dimensional; param ``rho_es`` is the
        list of per-block environment states (its length is the system dim).
      - ``brodutch``: a two-dimensional fixed block holding
        (|0><0| x rho0 + |1><1| x rho1 + |+><+| x rho_plus)/3 followed by
        one-dimensional free blocks; params ``rho0_e``, ``rho1_e``,
        ``rho_plus_e`` and ``tail_rho_es`` (list, one per trailing block).
      - ``appendix-a``: 4x2, two free 2-dim blocks with environment states
        |1E><1E| and |2E><2E|.
      - ``appendix-b``: 4x2, two fixed blocks, each a maximally entangled
        block-local pure state.
      - ``appendix-c``: 6x2, two fixed 2-dim blocks (an equal mixture of
        |1S 1E> and |+S +E>, and a maximally entangled state) plus one free
        2-dim block with environment state |2E><2E|.
    """
    if kind == "product":
        try:
            dim_s = int(params.pop("dim_s"))
            rho_e = as_matrix(params.pop("rho_e"))
        except KeyError as exc:
            raise ValueError(f"product family needs parameter {exc}") from exc
        _reject_extra(params)
        dec = DirectSumDecomposition(dim_s, rho_e.shape[0], (tuple(range(dim_s)),))
        return FamilySpec(dec, (FreeProduct(rho_e),))

    if kind == "zero-discord":
        try:
            rho_es = [as_matrix(r) for r in params.pop("rho_es")]
        except KeyError as exc:
            raise ValueError(f"zero-discord family needs parameter {exc}") from exc
        _reject_extra(params)
        if not rho_es:
            raise ValueError("rho_es must be a non-empty list of environment states")
        dim_e = rho_es[0].shape[0]
        dec = DirectSumDecomposition(len(rho_es), dim_e, tuple((i,) for i in range(len(rho_es))))
        return FamilySpec(dec, tuple(FreeProduct(r) for r in rho_es))

    if kind == "brodutch":
        try:
            rho0 = as_matrix(params.pop("rho0_e"))
            rho1 = as_matrix(params.pop("rho1_e"))
            rho_plus = as_matrix(params.pop("rho_plus_e"))
            tail = [as_matrix(r) for r in params.pop("tail_rho_es")]
        except KeyError as exc:
            raise ValueError(f"brodutch family needs parameter {exc}") from exc
        _reject_extra(params)
        if not tail:
            raise ValueError("tail_rho_es must supply at least one trailing block")
        dim_e = rho0.shape[0]
        ket0 = _basis_ket(2, 0)
        ket1 = _basis_ket(2, 1)
        plus = (ket0 + ket1) / np.sqrt(2)
        rho_se = (
            tensor_product(np.outer(ket0, ket0.conj()), rho0)
            + tensor_product(np.outer(ket1, ket1.conj()), rho1)
            + tensor_product(np.outer(plus, plus.conj()), rho_plus)
        ) / 3
        dim_s = 2 + len(tail)
        blocks = ((0, 1),) + tuple((2 + i,) for i in range(len(tail)))
        dec = DirectSumDecomposition(dim_s, dim_e, blocks)
        return FamilySpec(dec, (FixedCorrelated(rho_se),) + tuple(FreeProduct(r) for r in tail))

    if kind == "appendix-a":
        _reject_extra(params)
        dec = DirectSumDecomposition(4, 2, ((0, 1), (2, 3)))
        e0 = np.diag([1.0, 0.0]).astype(np.complex128)
        e1 = np.diag([0.0, 1.0]).astype(np.complex128)
        return FamilySpec(dec, (FreeProduct(e0), FreeProduct(e1)))

    if kind == "appendix-b":
        _reject_extra(params)
        dec = DirectSumDecomposition(4, 2, ((0, 1), (2, 3)))
        bell = _pure([1, 0, 0, 1])
        return FamilySpec(dec, (FixedCorrelated(bell), FixedCorrelated(bell)))

    if kind == "appendix-c":
        _reject_extra(params)
        dec = DirectSumDecomposition(6, 2, ((0, 1), (2, 3), (4, 5)))
        rho1 = (_pure([1, 0, 0, 0]) + _pure([1, 1, 1, 1])) / 2
        bell = _pure([1, 0, 0, 1])
        e1 = np.diag([0.0, 1.0]).astype(np.complex128)
        return FamilySpec(dec, (FixedCorrelated(rho1), FixedCorrelated(bell), FreeProduct(e1)))

    raise ValueError(f"unknown family kind {kind!r}")


def _reject_extra(params: dict) -> None:
    if params:
        raise ValueError(f"unexpected parameters: {sorted(params)}")


def random_family_spec(seed, max_dim_s: int = 6, max_dim_e: int = 3) -> FamilySpec:
    """Random decomposition and block mix, for property and stress tests."""
    rng = np.random.default_rng(seed)
    dim_s = int(rng.integers(1, max_dim_s + 1))
    dim_e = int(rng.integers(1, max_dim_e + 1))
    perm = list(rng.permutation(dim_s))
    n_blocks = int(rng.integers(1, dim_s + 1))
    cuts = sorted(rng.choice(np.arange(1, dim_s), size=n_blocks - 1, replace=False)) if n_blocks > 1 else []
    blocks = []
    start = 0
    for stop in list(cuts) + [dim_s]:
        blocks.append(tuple(sorted(int(i) for i in perm[start:stop])))
        start = stop
    dec = DirectSumDecomposition(dim_s, dim_e, tuple(blocks))
    specs: list[BlockSpec] = []
    for alpha in range(dec.block_count):
        if rng.random() < 0.5:
            specs.append(FixedCorrelated(random_density(dec.block_dim(alpha) * dim_e, rng)))
        else:
            specs.append(FreeProduct(random_density(dim_e, rng)))
    return FamilySpec(dec, tuple(specs))


def spec_to_json(spec: FamilySpec) -> dict:
    """Scenario document: dims, block index sets, per-block fixed operators."""
    dec = spec.decomposition
    block_specs = []
    for bs in spec.block_specs:
        if isinstance(bs, FreeProduct):
            block_specs.append({"type": "freeProduct", "rhoE": matrix_to_json(bs.rho_e)})
        else:
            block_specs.append({"type": "fixedCorrelated", "rhoSE": matrix_to_json(bs.rho_se)})
    return {
        "dimS": dec.dim_s,
        "dimE": dec.dim_e,
        "blocks": [list(b) for b in dec.blocks],
        "blockSpecs": block_specs,
    }


def _operator_from_json(value, what: str) -> np.ndarray:
    if isinstance(value, dict):
        if set(value) != {"pure"}:
            raise ValueError(f"{what}: operator object must have exactly the key 'pure'")
        ket = vector_from_json(value["pure"])
        norm = np.linalg.norm(ket)
        if norm <= 0:
            raise ValueError(f"{what}: pure-state amplitudes must not all vanish")
        return _pure(ket)
    return matrix_from_json(value)


def spec_from_json(doc) -> FamilySpec:
    """Parse and validate the scenario JSON schema into a FamilySpec."""
    if not isinstance(doc, dict):
        raise ValueError("scenario must be a JSON object")
    missing = [k for k in ("dimS", "dimE", "blocks", "blockSpecs") if k not in doc]
    if missing:
        raise ValueError(f"scenario is missing keys {missing}")
    if not isinstance(doc["dimS"], int) or not isinstance(doc["dimE"], int):
        raise ValueError("dimS and dimE must be integers")
    if not isinstance(doc["blocks"], list) or not isinstance(doc["blockSpecs"], list):
        raise ValueError("blocks and blockSpecs must be JSON arrays")
    blocks = []
    for i, b in enumerate(doc["blocks"]):
        if not isinstance(b, list) or not all(isinstance(x, int) for x in b):
            raise ValueError(f"block {i} must be a list of integer basis indices")
        blocks.append(tuple(b))
    dec = DirectSumDecomposition(doc["dimS"], doc["dimE"], tuple(blocks))
    specs: list[BlockSpec] = []
    for alpha, entry in enumerate(doc["blockSpecs"]):
        if not isinstance(entry, dict) or "type" not in entry:
            raise ValueError(f"block spec {alpha} must be an object with a 'type' key")
        kind = entry["type"]
        if kind == "freeProduct":
            if "rhoE" not in entry:
                raise ValueError(f"block spec {alpha}: freeProduct needs 'rhoE'")
            specs.append(FreeProduct(_operator_from_json(entry["rhoE"], f"block {alpha} rhoE")))
        elif kind == "fixedCorrelated":
            if "rhoSE" not in entry:
                raise ValueError(f"block spec {alpha}: fixedCorrelated needs 'rhoSE'")
            specs.append(
                FixedCorrelated(_operator_from_json(entry["rhoSE"], f"block {alpha} rhoSE"))
            )
        else:
            raise ValueError(f"block spec {alpha}: unknown type {kind!r}")
    return FamilySpec(dec, tuple(specs))


def load_spec(path) -> FamilySpec:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return spec_from_json(doc)


def dump_spec(spec: FamilySpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec_to_json(spec), fh, indent=2)
        fh.write("\n")
