"""Batch screening experiments.

Three workflows share one declarative config (`ExperimentSpec`):

- `run_candidate_screen`: rotate folds over an inorganic catalogue, training
  on measured superconductors plus the remaining catalogue rows as Tc = 0
  negatives, and rank every catalogue row by its predicted Tc.
- `run_temporal_eval`: train only on records reported before a cutoff year
  and score the predictions against a later reference list.
- `run_family_discovery`: repeatedly retrain with one material family held
  out entirely and count how many of its members each run flags as
  superconducting.

Every workflow asserts train/test composition disjointness at runtime and
derives all randomness from seeds recorded in its result.
"""

from __future__ import annotations

import dataclasses
import json
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .dataset import (
    FamilyLabel,
    MaterialRecord,
    classify_family,
    composition_key,
    dataset_fingerprint,
    garbage_in,
    remove_overlap,
    rotating_folds,
)
from .formula import Composition, FormulaError, parse_composition
from .metrics import (
    EvalReport,
    Histogram,
    baseline_precision,
    confusion_at_threshold,
    confusion_counts,
    positive_count_histogram,
)
from .nn import EmptyDatasetError, Head, ModelConfig, TrainConfig, predict, train

import csv


class LeakageError(RuntimeError):
    """A test composition showed up in the training set."""


class UnknownFieldError(ValueError):
    pass


class UnknownFamilyError(ValueError):
    pass


# ---------------------------------------------------------------------------
# declarative training filter


_FILTER_FIELDS = ("year_before", "families", "exclude_families", "remove")


def _family(name: str) -> FamilyLabel:
    try:
        return FamilyLabel[str(name).upper()]
    except KeyError:
        known = ", ".join(f.name for f in FamilyLabel)
        raise UnknownFamilyError(f"unknown family {name!r} (known: {known})") from None


@dataclass(frozen=True)
class TrainingFilter:
    """Predicate over MaterialRecord composed from declarative pieces.

    - year_before: keep only records dated strictly before the year; undated
      records fail a year bound (their side of the cutoff is unknowable).
    - families: when set, keep only records classified into one of these.
    - exclude_families: drop records classified into any of these.
    - remove: drop records matching any of these formulas (tolerant
      composition match, same rule as dataset.remove_named).

    An empty filter keeps everything. Records without a composition pass
    unless a family rule is present (they cannot be classified).
    """

    year_before: int | None = None
    families: frozenset[FamilyLabel] | None = None
    exclude_families: frozenset[FamilyLabel] = frozenset()
    remove: tuple[str, ...] = ()
    _removals: tuple[Composition, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        targets = []
        for f in self.remove:
            try:
                targets.append(parse_composition(f))
            except FormulaError as err:
                raise ValueError(f"cannot parse removal target {f!r}: {err}") from err
        object.__setattr__(self, "_removals", tuple(targets))

    def __call__(self, record: MaterialRecord) -> bool:
        if self.year_before is not None:
            if record.year is None or record.year >= self.year_before:
                return False
        comp = record.composition
        if self.families is not None or self.exclude_families:
            if comp is None:
                return False
            fam = classify_family(comp)
            if self.families is not None and fam not in self.families:
                return False
            if fam in self.exclude_families:
                return False
        if comp is not None:
            for target in self._removals:
                if frozenset(comp) == frozenset(target) and comp.almost_equal(target):
                    return False
        return True

    def apply(self, records: Sequence[MaterialRecord]) -> list[MaterialRecord]:
        return [r for r in records if self(r)]

    def describe(self) -> dict:
        """JSON-ready echo of the filter for manifests."""
        out: dict = {}
        if self.year_before is not None:
            out["year_before"] = self.year_before
        if self.families is not None:
            out["families"] = sorted(f.name for f in self.families)
        if self.exclude_families:
            out["exclude_families"] = sorted(f.name for f in self.exclude_families)
        if self.remove:
            out["remove"] = list(self.remove)
        return out


def build_training_filter(fragment: Mapping) -> TrainingFilter:
    """Build a TrainingFilter from a JSON-shaped mapping.

    Recognized keys: year_before (int), families (list of family names),
    exclude_families (list of family names), remove (list of formulas).
    Anything else is a config typo and raises UnknownFieldError.
    """
    unknown = set(fragment) - set(_FILTER_FIELDS)
    if unknown:
        raise UnknownFieldError(
            f"unknown training_filter field(s) {sorted(unknown)}; "
            f"known: {list(_FILTER_FIELDS)}"
        )
    year_before = fragment.get("year_before")
    if year_before is not None:
        year_before = int(year_before)
    families = fragment.get("families")
    if families is not None:
        families = frozenset(_family(f) for f in families)
    exclude = frozenset(_family(f) for f in fragment.get("exclude_families", ()))
    remove = tuple(str(f) for f in fragment.get("remove", ()))
    return TrainingFilter(year_before, families, exclude, remove)


# ---------------------------------------------------------------------------
# experiment spec


_SPEC_FIELDS = (
    "name",
    "training_filter",
    "test_set",
    "model",
    "train",
    "repeats",
    "thresholds",
    "fold_size",
)


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: what to train on, what to score, how often."""

    name: str
    training_filter: TrainingFilter = TrainingFilter()
    test_set: str = ""
    model: ModelConfig = ModelConfig()
    train: TrainConfig = TrainConfig()
    repeats: int = 1
    thresholds: tuple[float, ...] = (0.0, 4.0, 10.0)
    fold_size: int | None = None

    def __post_init__(self):
        if not self.name:
            raise ValueError("experiment needs a name")
        if self.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")
        ths = tuple(float(t) for t in self.thresholds)
        if not ths:
            raise ValueError("need at least one threshold")
        if any(t < 0 for t in ths) or list(ths) != sorted(ths):
            raise ValueError(f"thresholds must be non-negative and ascending, got {ths}")
        object.__setattr__(self, "thresholds", ths)
        if self.fold_size is not None and self.fold_size < 1:
            raise ValueError(f"fold_size must be >= 1, got {self.fold_size}")

    def describe(self) -> dict:
        """JSON-ready echo for manifests."""
        return {
            "name": self.name,
            "training_filter": self.training_filter.describe(),
            "test_set": self.test_set,
            "model": {
                "conv_layers": self.model.conv_layers,
                "channels_per_layer": self.model.channels_per_layer,
                "dense_hidden": self.model.dense_hidden,
                "head": self.model.head.name,
                "tc_transform": self.model.tc_transform.name,
                "seed": self.model.seed,
                "dtype": self.model.dtype,
            },
            "train": {
                "learning_rate": self.train.learning_rate,
                "batch_size": self.train.batch_size,
                "epochs": self.train.epochs,
                "loss": self.train.loss.name,
                "shuffle_seed": self.train.shuffle_seed,
            },
            "repeats": self.repeats,
            "thresholds": list(self.thresholds),
            "fold_size": self.fold_size,
        }


def _build_sub(cls, fragment: Mapping, enums: Mapping[str, type], what: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(fragment) - names
    if unknown:
        raise UnknownFieldError(
            f"unknown {what} field(s) {sorted(unknown)}; known: {sorted(names)}"
        )
    kwargs = dict(fragment)
    for key, enum_cls in enums.items():
        if key in kwargs:
            try:
                kwargs[key] = enum_cls[str(kwargs[key]).upper()]
            except KeyError:
                raise ValueError(
                    f"{what}.{key}: unknown value {kwargs[key]!r} "
                    f"(known: {', '.join(e.name for e in enum_cls)})"
                ) from None
    return cls(**kwargs)


def spec_from_dict(data: Mapping) -> ExperimentSpec:
    from .nn import Loss, TcTransform  # local to keep module import light

    unknown = set(data) - set(_SPEC_FIELDS)
    if unknown:
        raise UnknownFieldError(
            f"unknown experiment field(s) {sorted(unknown)}; known: {list(_SPEC_FIELDS)}"
        )
    if "name" not in data:
        raise UnknownFieldError("experiment config needs a 'name'")
    model = _build_sub(
        ModelConfig,
        data.get("model", {}),
        {"head": Head, "tc_transform": TcTransform},
        "model",
    )
    train_cfg = _build_sub(TrainConfig, data.get("train", {}), {"loss": Loss}, "train")
    return ExperimentSpec(
        name=str(data["name"]),
        training_filter=build_training_filter(data.get("training_filter", {})),
        test_set=str(data.get("test_set", "")),
        model=model,
        train=train_cfg,
        repeats=int(data.get("repeats", 1)),
        thresholds=tuple(data.get("thresholds", (0.0, 4.0, 10.0))),
        fold_size=data.get("fold_size"),
    )


def load_experiment_spec(path) -> ExperimentSpec:
    with open(path) as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as err:
            raise ValueError(f"{path}: not valid JSON: {err}") from err
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a JSON object at top level")
    return spec_from_dict(data)


# ---------------------------------------------------------------------------
# shared plumbing


def _trainable(records: Sequence[MaterialRecord]) -> list[MaterialRecord]:
    """Rows that can actually feed the model: composition and Tc present."""
    return [r for r in records if r.composition is not None and r.tc_kelvin is not None]


def _samples(records: Sequence[MaterialRecord]) -> list[tuple[Composition, float]]:
    return [(r.composition, r.tc_kelvin) for r in records]


def _assert_disjoint(
    train_records: Sequence[MaterialRecord],
    test_records: Sequence[MaterialRecord],
    context: str,
) -> None:
    train_keys = {composition_key(r) for r in train_records}
    shared = [composition_key(r) for r in test_records if composition_key(r) in train_keys]
    if shared:
        raise LeakageError(
            f"{context}: {len(shared)} test composition(s) also in training, "
            f"e.g. {shared[0]!r}"
        )


def _run_indexed(tasks: Sequence, fn, jobs: int) -> list:
    """Run fn over tasks, optionally in threads; results keep task order."""
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


# ---------------------------------------------------------------------------
# candidate screening over a catalogue


@dataclass(frozen=True)
class CandidateRow:
    formula: str  # canonical composition string
    predicted_tc_kelvin: float
    fold_id: int
    family: FamilyLabel


@dataclass
class CandidateList:
    rows: list[CandidateRow]  # sorted by predicted Tc descending
    threshold_counts: list[tuple[float, int]]  # (threshold K, rows strictly above)
    n_folds: int
    fold_seed: int
    model_seeds: list[int]
    n_excluded: int  # cuprate/FeSC rows dropped from the ranked list
    training_fingerprint: str
    corpus_fingerprint: str


def run_candidate_screen(
    sc_data: Sequence[MaterialRecord],
    cod_data: Sequence[MaterialRecord],
    spec: ExperimentSpec,
    *,
    jobs: int = 1,
) -> CandidateList:
    """Rank every catalogue material by predicted Tc, without self-leakage.

    The catalogue is shuffled into folds of spec.fold_size. Each fold is
    predicted by a model trained on the measured superconductors (after
    spec.training_filter) plus every *other* catalogue row relabelled as a
    Tc = 0 negative, so no material ever contributes to the model that
    scores it. Rows classified CUPRATE or FESC are dropped from the final
    ranking; known-family hits are not discoveries.
    """
    if spec.fold_size is None:
        raise ValueError("candidate screening needs spec.fold_size")
    if spec.model.head is not Head.REGRESSION:
        raise ValueError("candidate ranking needs kelvin predictions (REGRESSION head)")
    sc_train = _trainable(spec.training_filter.apply(sc_data))
    if not sc_train:
        raise EmptyDatasetError("training filter left no superconductor rows")
    corpus = garbage_in([r for r in cod_data if r.composition is not None], sc_train)
    if not corpus:
        raise EmptyDatasetError("catalogue is empty after overlap removal")
    folds = rotating_folds(corpus, spec.fold_size, seed=spec.model.seed)
    sc_samples = _samples(sc_train)

    def score_fold(task):
        fold_id, (train_idx, test_idx) = task
        train_rows = [corpus[i] for i in train_idx]
        test_rows = [corpus[i] for i in test_idx]
        _assert_disjoint(sc_train + train_rows, test_rows, f"fold {fold_id}")
        model_cfg = dataclasses.replace(spec.model, seed=spec.model.seed + fold_id)
        params, _ = train(sc_samples + _samples(train_rows), model_cfg, spec.train)
        preds = predict(params, [r.composition for r in test_rows])
        return [
            CandidateRow(
                formula=r.composition.formula(),
                predicted_tc_kelvin=float(p),
                fold_id=fold_id,
                family=classify_family(r.composition),
            )
            for r, p in zip(test_rows, preds)
        ]

    per_fold = _run_indexed(list(enumerate(folds)), score_fold, jobs)
    rows = [row for fold_rows in per_fold for row in fold_rows]
    kept = [
        r for r in rows if r.family not in (FamilyLabel.CUPRATE, FamilyLabel.FESC)
    ]
    kept.sort(key=lambda r: (-r.predicted_tc_kelvin, r.formula))
    counts = [
        (t, sum(1 for r in kept if r.predicted_tc_kelvin > t)) for t in spec.thresholds
    ]
    return CandidateList(
        rows=kept,
        threshold_counts=counts,
        n_folds=len(folds),
        fold_seed=spec.model.seed,
        model_seeds=[spec.model.seed + i for i in range(len(folds))],
        n_excluded=len(rows) - len(kept),
        training_fingerprint=dataset_fingerprint(sc_train),
        corpus_fingerprint=dataset_fingerprint(corpus),
    )


def write_candidates_csv(clist: CandidateList, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["formula", "predicted_tc_K", "fold_id", "family"])
        for r in clist.rows:
            w.writerow(
                [r.formula, f"{r.predicted_tc_kelvin:.9g}", r.fold_id, r.family.value]
            )


def write_threshold_counts_csv(clist: CandidateList, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["threshold_K", "count"])
        for t, c in clist.threshold_counts:
            w.writerow([f"{t:.9g}", c])


# ---------------------------------------------------------------------------
# temporally separated evaluation


def run_temporal_eval(
    sc_data: Sequence[MaterialRecord],
    cod_data: Sequence[MaterialRecord],
    eval_list: Sequence[MaterialRecord],
    spec: ExperimentSpec,
) -> list[EvalReport]:
    """Train on filtered (typically pre-cutoff) data, score a reference list.

    The training filter (which must carry a year bound — that is the whole
    point of the protocol) applies to both the measured records and the
    catalogue rows that become Tc = 0 negatives. Evaluation rows that
    overlap the training compositions are removed from the *evaluation*
    side: they were answered by memory, not prediction.

    With a REGRESSION head one model serves every threshold; with a
    BINARY_LOGIT head each threshold gets its own model trained on
    tc > threshold labels and scored at probability 0.5.
    """
    if spec.training_filter.year_before is None:
        raise ValueError("temporal evaluation needs training_filter.year_before")
    if not eval_list:
        raise EmptyDatasetError("evaluation list is empty")
    bad = [r for r in eval_list if r.composition is None]
    if bad:
        raise ValueError(
            f"evaluation list has {len(bad)} non-numeric formula(s), "
            f"e.g. {bad[0].raw_formula!r}; substitute variables first"
        )
    missing = [r for r in eval_list if r.tc_kelvin is None]
    if missing:
        raise ValueError(
            f"evaluation list has {len(missing)} row(s) without a known Tc, "
            f"e.g. {missing[0].raw_formula!r}"
        )
    eval_rows = list(eval_list)
    sc_train = _trainable(spec.training_filter.apply(sc_data))
    if not sc_train:
        raise EmptyDatasetError("training filter left no superconductor rows")
    negatives = garbage_in(
        spec.training_filter.apply([r for r in cod_data if r.composition is not None]),
        sc_train,
        eval_rows,
    )
    train_rows = sc_train + negatives
    eval_rows = remove_overlap(eval_rows, train_rows)
    if not eval_rows:
        raise EmptyDatasetError("evaluation list is empty after overlap removal")
    _assert_disjoint(train_rows, eval_rows, "temporal eval")

    true_tc = [r.tc_kelvin for r in eval_rows]
    eval_comps = [r.composition for r in eval_rows]
    samples = _samples(train_rows)

    reports = []
    if spec.model.head is Head.REGRESSION:
        params, _ = train(samples, spec.model, spec.train)
        pred = predict(params, eval_comps)
        for t in spec.thresholds:
            reports.append(confusion_at_threshold(pred, true_tc, t))
    else:
        for t in spec.thresholds:
            params, _ = train(samples, spec.model, spec.train, label_threshold=t)
            prob = predict(params, eval_comps)
            reports.append(
                confusion_counts(
                    prob > 0.5,
                    [tc > t for tc in true_tc],
                    t,
                    baseline_precision(true_tc, t),
                )
            )
    return reports


# ---------------------------------------------------------------------------
# family discovery


@dataclass(frozen=True)
class RunReport:
    run_index: int
    model_seed: int
    shuffle_seed: int
    n_positive: int  # test-family rows predicted above 0 K
    eval_report: EvalReport | None  # reference-list check, when a list was given
    valid: bool | None  # precision strictly above baseline; None when unchecked


@dataclass
class DiscoveryResult:
    family: FamilyLabel
    histogram: Histogram
    runs: list[RunReport]
    n_test: int
    training_fingerprint: str
    test_fingerprint: str


def run_family_discovery(
    sc_data: Sequence[MaterialRecord],
    cod_data: Sequence[MaterialRecord],
    spec: ExperimentSpec,
    *,
    eval_list: Sequence[MaterialRecord] = (),
    jobs: int = 1,
) -> DiscoveryResult:
    """Hold out one whole family (spec.test_set) and retrain spec.repeats
    times, counting per run how many held-out materials come out above 0 K.

    Run k derives its seeds as model.seed + k and shuffle_seed + k, so the
    ensemble varies exactly where retraining would: initial weights and
    input order. A REGRESSION model counts a material when it lands above
    0 K; a BINARY_LOGIT model (trained on tc > lowest threshold) when its
    probability clears 0.5. When a reference list is supplied, each run
    also predicts it and is flagged invalid if its precision at the lowest
    configured threshold fails to beat always-guessing-positive.
    """
    target = _family(spec.test_set)
    test_rows = [
        r
        for r in _trainable(sc_data)
        if classify_family(r.composition) is target
    ]
    if not test_rows:
        raise EmptyDatasetError(f"no {target.name} rows to hold out")
    sc_train = _trainable(spec.training_filter.apply(sc_data))
    if not sc_train:
        raise EmptyDatasetError("training filter left no superconductor rows")
    leaked = [r for r in sc_train if classify_family(r.composition) is target]
    if leaked:
        # A family exclusion rule or a year bound predating the family must
        # have kept these out; a filter that leaves any in defeats the run.
        raise ValueError(
            f"training data still holds {len(leaked)} {target.name} row(s) "
            f"after filtering, e.g. {leaked[0].raw_formula!r}"
        )
    negatives = garbage_in(
        spec.training_filter.apply([r for r in cod_data if r.composition is not None]),
        sc_train,
        list(test_rows) + list(eval_list),
    )
    train_rows = sc_train + negatives
    test_rows = remove_overlap(test_rows, train_rows)
    if not test_rows:
        raise EmptyDatasetError("held-out family fully overlaps training data")
    _assert_disjoint(train_rows, test_rows, f"{target.name} discovery")

    samples = _samples(train_rows)
    test_comps = [r.composition for r in test_rows]
    eval_rows = [r for r in eval_list if r.composition is not None and r.tc_kelvin is not None]
    eval_comps = [r.composition for r in eval_rows]
    eval_tc = [r.tc_kelvin for r in eval_rows]
    check_t = spec.thresholds[0]

    classifying = spec.model.head is Head.BINARY_LOGIT

    def one_run(k: int) -> RunReport:
        model_cfg = dataclasses.replace(spec.model, seed=spec.model.seed + k)
        train_cfg = dataclasses.replace(
            spec.train, shuffle_seed=spec.train.shuffle_seed + k
        )
        params, _ = train(samples, model_cfg, train_cfg, label_threshold=check_t)
        pred = predict(params, test_comps)
        n_positive = int((pred > (0.5 if classifying else 0.0)).sum())
        report = None
        valid = None
        if eval_rows:
            eval_pred = predict(params, eval_comps)
            if classifying:
                report = confusion_counts(
                    eval_pred > 0.5,
                    [tc > check_t for tc in eval_tc],
                    check_t,
                    baseline_precision(eval_tc, check_t),
                )
            else:
                report = confusion_at_threshold(eval_pred, eval_tc, check_t)
            valid = report.precision is not None and report.precision > report.baseline_precision
        return RunReport(
            run_index=k,
            model_seed=model_cfg.seed,
            shuffle_seed=train_cfg.shuffle_seed,
            n_positive=n_positive,
            eval_report=report,
            valid=valid,
        )

    runs = _run_indexed(list(range(spec.repeats)), one_run, jobs)
    hist = positive_count_histogram([r.n_positive for r in runs])
    return DiscoveryResult(
        family=target,
        histogram=hist,
        runs=runs,
        n_test=len(test_rows),
        training_fingerprint=dataset_fingerprint(train_rows),
        test_fingerprint=dataset_fingerprint(test_rows),
    )


def write_runs_csv(result: DiscoveryResult, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(
            ["run_index", "model_seed", "shuffle_seed", "n_positive", "precision", "baseline_precision", "valid"]
        )
        for r in result.runs:
            rep = r.eval_report
            precision = "" if rep is None or rep.precision is None else f"{rep.precision:.9g}"
            base = "" if rep is None or rep.baseline_precision is None else f"{rep.baseline_precision:.9g}"
            w.writerow(
                [
                    r.run_index,
                    r.model_seed,
                    r.shuffle_seed,
                    r.n_positive,
                    precision,
                    base,
                    "" if r.valid is None else str(r.valid).lower(),
                ]
            )
