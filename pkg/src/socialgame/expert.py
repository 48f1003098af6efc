"""Expert mode learning.

Per tendency category, a genetic algorithm calibrates the 16 payoff
coefficients (efficiency and safety weights per agent per joint strategy)
so the solved equilibrium proceed-probabilities reproduce the observed
crossing order.  The benefit terms do not depend on the coefficients, so
they are precomputed once per dataset and the per-candidate cost reduces
to assembling payoffs and solving stacked 2x2 games.
"""

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .events import LabeledEvent, dataset_fingerprint
from .game import PayoffParams, benefit_features
from .nash import solve_proceed_probs
from .orientation import OrientationConfig, TendencyCategory

__all__ = [
    "EmptyDataset",
    "SchemaVersionMismatch",
    "LibraryFormatError",
    "COEFF_DIM",
    "GAConfig",
    "ExpertParams",
    "ExpertLibrary",
    "EventFeatures",
    "precompute_features",
    "proceed_prob_matrix",
    "evaluate_loss_matrix",
    "evaluate_loss",
    "ga_optimize",
    "learn_library",
    "lookup",
    "default_expert",
    "save_library",
    "load_library",
]

COEFF_DIM = 16  # alpha (2 agents x 4 cells) then beta (2 x 4)

CATEGORY_ORDER = (
    TendencyCategory.PRECEDENCE,
    TendencyCategory.AMBIGUOUS,
    TendencyCategory.YIELDING,
)

LIBRARY_FORMAT_VERSION = 1


class EmptyDataset(ValueError):
    pass


class SchemaVersionMismatch(ValueError):
    pass


class LibraryFormatError(ValueError):
    pass


@dataclass(frozen=True)
class GAConfig:
    population: int = 64
    generations: int = 200
    crossover_rate: float = 0.8
    mutation_rate: float = 0.1
    mutation_scale: float = 0.5
    tournament: int = 3
    elitism: int = 2
    bounds: tuple[float, float] = (-10.0, 10.0)
    tol: float = 0.05
    patience: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.population < 4:
            raise ValueError("population must be at least 4")
        if not (0.0 <= self.crossover_rate <= 1.0 and 0.0 <= self.mutation_rate <= 1.0):
            raise ValueError("rates must lie in [0, 1]")
        if self.bounds[0] >= self.bounds[1]:
            raise ValueError("empty coefficient bounds")
        if self.elitism < 0 or self.elitism >= self.population:
            raise ValueError("elitism must be smaller than the population")


@dataclass(frozen=True)
class ExpertParams:
    """Calibrated coefficients plus provenance.

    ``alpha``/``beta`` are nested (2, 4) tuples so instances compare and
    round-trip exactly.
    """

    category: TendencyCategory | None
    alpha: tuple
    beta: tuple
    loss: float
    dataset_fingerprint: str = ""
    seed: int = -1
    converged: bool = False
    generations: int = 0

    def __post_init__(self):
        object.__setattr__(
            self, "alpha", tuple(tuple(float(x) for x in row) for row in self.alpha)
        )
        object.__setattr__(
            self, "beta", tuple(tuple(float(x) for x in row) for row in self.beta)
        )
        if len(self.alpha) != 2 or any(len(r) != 4 for r in self.alpha):
            raise ValueError("alpha must be 2x4")
        if len(self.beta) != 2 or any(len(r) != 4 for r in self.beta):
            raise ValueError("beta must be 2x4")
        if not self.loss >= 0.0:
            raise ValueError("loss must be non-negative")

    def coefficient_vector(self) -> np.ndarray:
        return np.concatenate([np.ravel(self.alpha), np.ravel(self.beta)])

    def apply_to(self, params: PayoffParams) -> PayoffParams:
        return params.with_coefficients(self.alpha, self.beta)


def default_expert() -> ExpertParams:
    """Documented fallback: unit weights on every benefit term."""
    ones = ((1.0,) * 4,) * 2
    return ExpertParams(category=None, alpha=ones, beta=ones, loss=math.inf)


@dataclass
class ExpertLibrary:
    """Per-tendency experts plus an optional unpartitioned (global) fit used
    as the comparison baseline."""

    entries: dict = field(default_factory=dict)  # TendencyCategory -> ExpertParams
    global_entry: ExpertParams | None = None
    version: int = LIBRARY_FORMAT_VERSION
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for key in self.entries:
            if not isinstance(key, TendencyCategory):
                raise ValueError(f"library keys must be tendency categories, got {key!r}")


def lookup(library: ExpertLibrary, category: TendencyCategory) -> tuple[ExpertParams, bool]:
    """Entry for the category; falls back to the ambiguous entry, then to
    the documented defaults.  The flag reports whether a fallback was used."""
    if category in library.entries:
        return library.entries[category], False
    if TendencyCategory.AMBIGUOUS in library.entries:
        return library.entries[TendencyCategory.AMBIGUOUS], True
    return default_expert(), True


@dataclass
class EventFeatures:
    """Coefficient-independent benefit terms over the concatenated decision
    frames of a dataset."""

    T: np.ndarray  # (2, 4, F)
    R: np.ndarray  # (2, 4, F)
    starts: np.ndarray  # (E,) frame offset of each event
    counts: np.ndarray  # (E,)
    labels_l: np.ndarray  # (E,)
    labels_s: np.ndarray  # (E,)

    @property
    def n_events(self) -> int:
        return len(self.starts)

    @property
    def n_frames(self) -> int:
        return self.T.shape[2]

    def event_slice(self, k: int) -> slice:
        return slice(int(self.starts[k]), int(self.starts[k] + self.counts[k]))


def precompute_features(
    events: list[LabeledEvent],
    params: PayoffParams,
    config: OrientationConfig | None = None,
) -> EventFeatures:
    if not events:
        raise EmptyDataset("no events to featurize")
    d_l, v_l, d_s, v_s, starts, counts = [], [], [], [], [], []
    offset = 0
    for ev in events:
        n = ev.decision_frames()
        starts.append(offset)
        counts.append(n)
        offset += n
        d_l.append(ev.d_l[:n])
        v_l.append(ev.v_l[:n])
        d_s.append(ev.d_s[:n])
        v_s.append(ev.v_s[:n])
    T, R = benefit_features(
        np.concatenate(d_l), np.concatenate(v_l),
        np.concatenate(d_s), np.concatenate(v_s),
        params, config,
    )
    return EventFeatures(
        T=T, R=R,
        starts=np.asarray(starts), counts=np.asarray(counts),
        labels_l=np.asarray([ev.label_l for ev in events], dtype=float),
        labels_s=np.asarray([ev.label_s for ev in events], dtype=float),
    )


def proceed_prob_matrix(
    coeffs: np.ndarray, feats: EventFeatures
) -> tuple[np.ndarray, np.ndarray]:
    """Per-event mean proceed probabilities for stacked coefficient vectors.

    ``coeffs`` is (P, 16); returns (p_l, p_s), each (P, E): the equilibrium
    proceed probability averaged over each event's decision frames.
    """
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
    pop = coeffs.shape[0]
    alpha = coeffs[:, :8].reshape(pop, 2, 4)
    beta = coeffs[:, 8:].reshape(pop, 2, 4)
    u = np.einsum("pac,acf->pacf", alpha, feats.T)
    u += np.einsum("pac,acf->pacf", beta, feats.R)
    frames = feats.n_frames
    u_l = u[:, 0].transpose(0, 2, 1).reshape(pop, frames, 2, 2)
    u_s = u[:, 1].transpose(0, 2, 1).reshape(pop, frames, 2, 2)
    p, q = solve_proceed_probs(u_l, u_s)
    sums_l = np.add.reduceat(p, feats.starts, axis=1)
    sums_s = np.add.reduceat(q, feats.starts, axis=1)
    return sums_l / feats.counts, sums_s / feats.counts


def evaluate_loss_matrix(coeffs: np.ndarray, feats: EventFeatures) -> np.ndarray:
    """Mean squared label discrepancy per coefficient vector, in [0, 2]."""
    p_l, p_s = proceed_prob_matrix(coeffs, feats)
    sq = (feats.labels_l - p_l) ** 2 + (feats.labels_s - p_s) ** 2
    return sq.mean(axis=1)


def evaluate_loss(
    coeffs,
    events: list[LabeledEvent],
    params: PayoffParams,
    config: OrientationConfig | None = None,
) -> float:
    """Scalar convenience wrapper over ``evaluate_loss_matrix``."""
    if not events:
        raise EmptyDataset("no events to evaluate")
    feats = precompute_features(events, params, config)
    vec = np.asarray(coeffs, dtype=float).reshape(1, COEFF_DIM)
    return float(evaluate_loss_matrix(vec, feats)[0])


def _tournament_pick(rng, losses: np.ndarray, n: int, size: int) -> np.ndarray:
    idx = rng.integers(0, len(losses), size=(n, size))
    best = np.argmin(losses[idx], axis=1)
    return idx[np.arange(n), best]


def ga_optimize(
    events: list[LabeledEvent],
    ga: GAConfig,
    params: PayoffParams,
    config: OrientationConfig | None = None,
    allow_mixed_categories: bool = False,
    trace_out: list | None = None,
) -> ExpertParams:
    """Tournament-selection GA over the coefficient vector.

    The fitness (mean squared label discrepancy) is evaluated with the
    disturbance disabled so the objective is deterministic.  Stops when the
    best loss drops below ``ga.tol``, the best has not improved for
    ``ga.patience`` generations, or the generation budget is exhausted; the
    best-ever individual is returned either way (non-convergence is not an
    error).  ``trace_out``, when given, collects the per-generation best
    loss (non-increasing thanks to elitism).
    """
    if not events:
        raise EmptyDataset("cannot calibrate on an empty dataset")
    categories = {ev.category for ev in events}
    if len(categories) > 1 and not allow_mixed_categories:
        raise ValueError(
            "events span multiple tendency categories; partition first "
            "(or pass allow_mixed_categories=True for a global fit)"
        )
    fit_params = replace(params, sigma=0.0)
    feats = precompute_features(events, fit_params, config)
    rng = np.random.default_rng(ga.seed)
    lo, hi = ga.bounds
    pop = rng.uniform(lo, hi, size=(ga.population, COEFF_DIM))
    best_vec = pop[0].copy()
    best_loss = math.inf
    stall = 0
    converged = False
    generations_run = 0
    for gen in range(ga.generations):
        generations_run = gen + 1
        losses = evaluate_loss_matrix(pop, feats)
        order = np.argsort(losses, kind="stable")
        gen_best = float(losses[order[0]])
        if gen_best < best_loss - 1e-15:
            best_loss = gen_best
            best_vec = pop[order[0]].copy()
            stall = 0
        else:
            stall += 1
        if trace_out is not None:
            trace_out.append(min(gen_best, best_loss))
        if best_loss < ga.tol:
            converged = True
            break
        if stall > ga.patience:
            break
        n_children = ga.population - ga.elitism
        mothers = pop[_tournament_pick(rng, losses, n_children, ga.tournament)]
        fathers = pop[_tournament_pick(rng, losses, n_children, ga.tournament)]
        cross = rng.random(n_children) < ga.crossover_rate
        gene_mask = rng.random((n_children, COEFF_DIM)) < 0.5
        children = np.where(cross[:, None] & gene_mask, fathers, mothers)
        mut_mask = rng.random((n_children, COEFF_DIM)) < ga.mutation_rate
        children = children + mut_mask * rng.normal(
            0.0, ga.mutation_scale, size=(n_children, COEFF_DIM)
        )
        np.clip(children, lo, hi, out=children)
        pop = np.vstack([pop[order[: ga.elitism]], children])
    category = next(iter(categories)) if len(categories) == 1 else None
    return ExpertParams(
        category=category,
        alpha=best_vec[:8].reshape(2, 4),
        beta=best_vec[8:].reshape(2, 4),
        loss=best_loss,
        dataset_fingerprint=dataset_fingerprint(events),
        seed=ga.seed,
        converged=converged,
        generations=generations_run,
    )


def learn_library(
    events: list[LabeledEvent],
    ga: GAConfig,
    params: PayoffParams,
    config: OrientationConfig | None = None,
    traces: dict | None = None,
) -> ExpertLibrary:
    """Partition by tendency category and calibrate one expert per part.

    Categories absent from the data are absent from the library; lookups
    fall back at query time.
    """
    if not events:
        raise EmptyDataset("cannot learn from an empty dataset")
    entries = {}
    for idx, category in enumerate(CATEGORY_ORDER):
        part = [ev for ev in events if ev.category is category]
        if not part:
            continue
        seed = int(np.random.SeedSequence([ga.seed, idx]).generate_state(1)[0])
        trace: list = []
        entries[category] = ga_optimize(
            part, replace(ga, seed=seed), params, config, trace_out=trace
        )
        if traces is not None:
            traces[category] = trace
    return ExpertLibrary(
        entries=entries,
        meta={
            "dataset_fingerprint": dataset_fingerprint(events),
            "master_seed": ga.seed,
            "n_events": len(events),
        },
    )


def _params_to_dict(entry: ExpertParams) -> dict:
    return {
        "category": entry.category.value if entry.category else None,
        "alpha": [[repr(x) for x in row] for row in entry.alpha],
        "beta": [[repr(x) for x in row] for row in entry.beta],
        "loss": repr(entry.loss),
        "dataset_fingerprint": entry.dataset_fingerprint,
        "seed": entry.seed,
        "converged": entry.converged,
        "generations": entry.generations,
    }


def _params_from_dict(doc: dict) -> ExpertParams:
    return ExpertParams(
        category=TendencyCategory(doc["category"]) if doc.get("category") else None,
        alpha=[[float(x) for x in row] for row in doc["alpha"]],
        beta=[[float(x) for x in row] for row in doc["beta"]],
        loss=float(doc["loss"]),
        dataset_fingerprint=doc.get("dataset_fingerprint", ""),
        seed=doc.get("seed", -1),
        converged=doc.get("converged", False),
        generations=doc.get("generations", 0),
    )


def save_library(library: ExpertLibrary, path) -> None:
    """Versioned JSON; coefficients as full-precision decimal strings."""
    doc = {
        "format_version": library.version,
        "meta": library.meta,
        "entries": {
            cat.value: _params_to_dict(entry)
            for cat, entry in sorted(library.entries.items(), key=lambda kv: kv[0].value)
        },
    }
    if library.global_entry is not None:
        doc["global"] = _params_to_dict(library.global_entry)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_library(path) -> ExpertLibrary:
    with open(path) as fh:
        raw = fh.read()
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise LibraryFormatError(
            f"{path}: malformed library JSON at byte offset {exc.pos}"
        ) from exc
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise LibraryFormatError(f"{path}: missing format_version")
    if doc["format_version"] != LIBRARY_FORMAT_VERSION:
        raise SchemaVersionMismatch(
            f"{path}: format_version {doc['format_version']!r} is not supported "
            f"(expected {LIBRARY_FORMAT_VERSION})"
        )
    entries = {}
    for key, sub in doc.get("entries", {}).items():
        try:
            entries[TendencyCategory(key)] = _params_from_dict(sub)
        except (KeyError, ValueError) as exc:
            raise LibraryFormatError(f"{path}: bad entry {key!r}: {exc}") from exc
    global_entry = None
    if "global" in doc:
        try:
            global_entry = _params_from_dict(doc["global"])
        except (KeyError, ValueError) as exc:
            raise LibraryFormatError(f"{path}: bad global entry: {exc}") from exc
    return ExpertLibrary(entries=entries, global_entry=global_entry, meta=doc.get("meta", {}))
