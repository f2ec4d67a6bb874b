"""Query-metered black-box access to a hidden comb.

An :class:`OracleSession` wraps a hidden :class:`~causalcomb.combs.CombSpec`
and exposes only what a lab could do with the physical process: feed it
inputs (``apply``), run prepare-and-measure shots (``sample_prepare_measure``
/ ``sample_batch``), estimate state overlaps by destructive swap circuits
(``overlap_estimate``), and wire a tooth shut (``reduce``).  The hidden
spec and its Choi operator are private attributes with no accessor;
discovery code sees statistics only.

Every channel invocation — real or virtual — goes through one cumulative
query meter that reduced child sessions share with their parent.  An
overlap estimate at accuracy ``eps`` and confidence ``kappa`` costs
``2 * ceil(2 * eps^-2 * log(2 / kappa))`` invocations (two state
preparations per swap circuit run).  In exact mode the estimate is the
true overlap and the charging policy decides whether those virtual runs
are still billed (``"theoretical"``) or only real invocations count
(``"actual"``, the default).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import IO, Mapping

import numpy as np

from .combs import DEFAULT_DIM_CAP, CombSpec, build_choi, trace_out_tooth
from .povm import IcPovm, product_born_table
from .tensors import Op, contract_wire, partial_trace, sort_wires, wire_key

__all__ = [
    "OracleConfig",
    "OracleSession",
    "PrepRecipe",
    "swap_test_sample_size",
    "swap_test_estimate",
]


def swap_test_sample_size(eps: float, kappa: float) -> int:
    """Circuit runs needed for overlap accuracy ``eps`` at confidence ``kappa``."""
    if not 0 < eps <= 1 or not 0 < kappa < 1:
        raise ValueError(f"need 0 < eps <= 1 and 0 < kappa < 1, got {eps}, {kappa}")
    return math.ceil(2.0 * eps**-2 * math.log(2.0 / kappa))


def swap_test_estimate(
    overlap: float, eps: float, kappa: float, rng: np.random.Generator
) -> float:
    """Simulate a destructive swap-circuit overlap estimate at the shot level.

    Each of the ``N`` runs accepts with probability ``(1 + Tr[rho sigma])/2``;
    the returned estimate is ``2 * accepts / N - 1``.  The per-run circuit
    is never simulated gate by gate — the acceptance probability is the
    entire distribution of the measurement, so drawing the accept count
    directly is statistically identical.
    """
    n = swap_test_sample_size(eps, kappa)
    p = min(max((1.0 + overlap) / 2.0, 0.0), 1.0)
    accepts = rng.binomial(n, p)
    return 2.0 * accepts / n - 1.0


@dataclass(frozen=True)
class PrepRecipe:
    """One state preparation through the black box.

    Feed ``state`` into ``input_label``, keep every other input maximally
    entangled with a reference copy, run the process once, and discard
    ``discard_label`` from the result.
    """

    input_label: str
    state: np.ndarray
    discard_label: str


@dataclass
class OracleConfig:
    mode: str = "exact"  # "exact" | "sampled"
    seed: int | None = None
    query_policy: str = "actual"  # "actual" | "theoretical"
    dim_cap: int = DEFAULT_DIM_CAP
    query_log: IO[str] | None = None
    trial: int | None = None

    def __post_init__(self):
        if self.mode not in ("exact", "sampled"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.query_policy not in ("actual", "theoretical"):
            raise ValueError(f"unknown query policy {self.query_policy!r}")
        if self.mode == "sampled" and self.seed is None:
            raise ValueError("sampled mode requires a seed")


class _QueryMeter:
    """Cumulative invocation counter shared across a session tree."""

    def __init__(self, log: IO[str] | None = None, trial: int | None = None):
        self.count = 0
        self._log = log
        self._trial = trial

    def charge(self, op: str, n: int) -> None:
        if n <= 0:
            return
        self.count += int(n)
        if self._log is not None:
            rec = {"trial": self._trial, "op": op, "n": int(n), "total": self.count}
            self._log.write(json.dumps(rec) + "\n")


class OracleSession:
    """Black-box handle on a comb; see the module docstring for the contract."""

    def __init__(self, spec: CombSpec, config: OracleConfig | None = None):
        config = config or OracleConfig()
        self._config = config
        self._choi = build_choi(spec, dim_cap=config.dim_cap)
        self._rng = np.random.default_rng(config.seed)
        self._meter = _QueryMeter(config.query_log, config.trial)
        self._tables: dict = {}

    # -- construction of reduced children -----------------------------------

    @classmethod
    def _from_choi(cls, choi: Op, parent: "OracleSession") -> "OracleSession":
        child = cls.__new__(cls)
        child._config = parent._config
        child._choi = choi
        child._rng = parent._rng
        child._meter = parent._meter
        child._tables = {}
        return child

    def reduce(self, input_label: str, output_label: str) -> "OracleSession":
        """Session for the comb with one tooth wired shut.

        The named input is fed maximally mixed and the named output is
        discarded on every future invocation.  The child shares this
        session's query meter and random stream.
        """
        return OracleSession._from_choi(
            trace_out_tooth(self._choi, input_label, output_label), self
        )

    # -- public geometry ----------------------------------------------------

    @property
    def mode(self) -> str:
        return self._config.mode

    @property
    def query_count(self) -> int:
        return self._meter.count

    @property
    def wires(self) -> tuple[str, ...]:
        return self._choi.labels

    @property
    def input_labels(self) -> tuple[str, ...]:
        return tuple(sorted((l for l in self.wires if l.startswith("A")), key=wire_key))

    @property
    def output_labels(self) -> tuple[str, ...]:
        return tuple(sorted((l for l in self.wires if l.startswith("B")), key=wire_key))

    def dim_of(self, label: str) -> int:
        return self._choi.dim_of(label)

    @property
    def n_teeth(self) -> int:
        return len(self.input_labels)

    # -- channel access -----------------------------------------------------

    def apply(self, x: Op) -> Op:
        """Run the process once on ``x`` (inputs plus optional ancilla wires).

        ``x`` must be a density operator covering every input wire; extra
        wires ride along untouched.  Returns the output density operator
        on (output wires + ancillas), wire-sorted.  One query.
        """
        ins = self.input_labels
        missing = set(ins) - set(x.labels)
        if missing:
            raise ValueError(f"input operator is missing wires {sorted(missing)}")
        anc = [l for l in x.labels if l not in set(ins)]
        clash = set(anc) & set(self.wires)
        if clash:
            raise ValueError(f"ancilla labels collide with process wires: {sorted(clash)}")

        choi_t = self._choi.matrix.reshape(self._choi.space.dims * 2)
        x_t = x.matrix.reshape(x.space.dims * 2)
        nc, nx = len(self._choi.labels), len(x.labels)
        # index plan: choi rows 0..nc-1, choi cols nc..2nc-1, then fresh for x
        ci_row = {l: i for i, l in enumerate(self._choi.labels)}
        ci_col = {l: nc + i for i, l in enumerate(self._choi.labels)}
        nxt = 2 * nc
        xi_row, xi_col = {}, {}
        for l in x.labels:
            if l in set(ins):
                xi_row[l] = ci_row[l]
                xi_col[l] = ci_col[l]
            else:
                xi_row[l], xi_col[l] = nxt, nxt + 1
                nxt += 2
        out_labels = list(self.output_labels) + anc
        out_idx = [ci_row[l] if l in ci_row else xi_row[l] for l in out_labels] + [
            ci_col[l] if l in ci_col else xi_col[l] for l in out_labels
        ]
        res = np.einsum(
            choi_t,
            [ci_row[l] for l in self._choi.labels] + [ci_col[l] for l in self._choi.labels],
            x_t,
            [xi_row[l] for l in x.labels] + [xi_col[l] for l in x.labels],
            out_idx,
        )
        scale = 1.0
        for l in ins:
            scale *= self.dim_of(l)
        dims = [self.dim_of(l) if l in self.wires else x.dim_of(l) for l in out_labels]
        total = int(np.prod(dims)) if dims else 1
        out = Op(
            space=type(x.space)(tuple(out_labels), tuple(dims)),
            matrix=scale * res.reshape(total, total),
        )
        self._meter.charge("apply", 1)
        return sort_wires(out)

    # -- prepare-and-measure sampling ---------------------------------------

    def _povm_map(self, povms) -> dict[str, IcPovm]:
        if isinstance(povms, IcPovm):
            return {l: povms for l in self.wires}
        return {l: povms[l] for l in self.wires}

    def _joint_table(self, povms) -> np.ndarray:
        """Exact outcome distribution of the standard prepare-measure scheme.

        Axis order follows the sorted wire labels (inputs first).  The
        entry for (a, b) equals the Born probability of the product POVM
        on the Choi operator, which is also exactly the distribution of
        drawing dual input states by their trace weights and measuring
        every output.
        """
        pmap = self._povm_map(povms)
        key = tuple((l, id(pmap[l])) for l in self._choi.labels)
        if key not in self._tables:
            tbl = product_born_table(self._choi, pmap)
            tbl = np.clip(tbl, 0.0, None)
            tbl /= tbl.sum()
            self._tables[key] = tbl
        return self._tables[key]

    def outcome_distribution(self, povms) -> np.ndarray:
        """Exact joint outcome table; the infinite-shot limit of sampling.

        Axes follow sorted wire order, inputs then outputs.  No queries
        are charged here; exact-probability callers account for their
        nominal shot budget via :meth:`note_virtual_queries`.
        """
        return self._joint_table(povms).copy()

    def sample_prepare_measure(self, input_choices, povms) -> tuple[int, ...]:
        """One prepare-and-measure shot; returns per-output outcome indices.

        ``input_choices`` gives, per input wire (sorted order, or a
        mapping by label), the index of the dual prepared state — the
        caller is expected to have drawn it with the POVM's trace weights.
        One query.
        """
        if self.mode != "sampled":
            raise ValueError("sample_prepare_measure requires sampled mode")
        ins, outs = self.input_labels, self.output_labels
        if isinstance(input_choices, Mapping):
            choices = tuple(int(input_choices[l]) for l in ins)
        else:
            choices = tuple(int(c) for c in input_choices)
        if len(choices) != len(ins):
            raise ValueError(f"need one choice per input wire {ins}")
        tbl = self._joint_table(povms)
        # wires are sorted: input axes first
        row = tbl[choices]
        w = row.sum()
        if w <= 0:
            raise ValueError("chosen input has zero preparation weight")
        flat = (row / w).reshape(-1)
        idx = self._rng.choice(flat.size, p=flat)
        self._meter.charge("sample", 1)
        return tuple(int(v) for v in np.unravel_index(idx, row.shape))

    def sample_batch(self, n_shots: int, povms) -> np.ndarray:
        """Counts from ``n_shots`` independent prepare-and-measure shots.

        Returns an integer array shaped like the joint table (inputs then
        outputs, sorted wire order).  Drawing the whole multinomial at
        once is statistically identical to looping single shots and
        costs ``n_shots`` queries either way.
        """
        if self.mode != "sampled":
            raise ValueError("sample_batch requires sampled mode")
        if n_shots < 1:
            raise ValueError("need at least one shot")
        tbl = self._joint_table(povms)
        counts = self._rng.multinomial(n_shots, tbl.reshape(-1)).reshape(tbl.shape)
        self._meter.charge("sample_batch", n_shots)
        return counts

    def note_virtual_queries(self, n: int, op: str = "virtual") -> None:
        """Charge ``n`` planned-but-not-executed invocations under the
        theoretical policy; a no-op under the actual policy."""
        if self._config.query_policy == "theoretical":
            self._meter.charge(op, n)

    # -- overlap estimation -------------------------------------------------

    def _prepare(self, recipe: PrepRecipe) -> Op:
        d = self.dim_of(recipe.input_label)
        state = np.asarray(recipe.state, dtype=complex)
        if state.shape != (d, d):
            raise ValueError(f"prep state shape {state.shape} != wire dim {d}")
        fed = contract_wire(self._choi, recipe.input_label, d * state.T)
        keep = [l for l in fed.labels if l != recipe.discard_label]
        return sort_wires(partial_trace(fed, keep))

    def overlap_estimate(
        self, recipe_a: PrepRecipe, recipe_b: PrepRecipe, eps: float, kappa: float
    ) -> float:
        """Estimate ``Tr[rho_a rho_b]`` for two preparation recipes.

        Sampled mode runs ``N = ceil(2 eps^-2 log(2/kappa))`` simulated
        swap circuits (2N queries).  Exact mode returns the true overlap;
        the theoretical policy still bills the 2N virtual invocations.
        """
        n = swap_test_sample_size(eps, kappa)
        rho_a = self._prepare(recipe_a)
        rho_b = self._prepare(recipe_b)
        if rho_a.labels != rho_b.labels:
            raise ValueError(
                f"recipes leave different wires: {rho_a.labels} vs {rho_b.labels}"
            )
        overlap = float(np.trace(rho_a.matrix @ rho_b.matrix).real)
        if self.mode == "sampled":
            self._meter.charge("swap_test", 2 * n)
            p = min(max((1.0 + overlap) / 2.0, 0.0), 1.0)
            accepts = self._rng.binomial(n, p)
            return 2.0 * accepts / n - 1.0
        self.note_virtual_queries(2 * n, op="swap_test")
        return overlap
