"""Dataset construction: ingestion, cleaning, synthetic negatives, splits.

The screening pipeline draws on three kinds of input tables, all sharing one
CSV schema (columns: formula, tc_K, year; extra columns are ignored):

- measured superconductors with critical temperatures,
- a broad inorganic-materials catalogue used as "probably-not-superconducting"
  material, and
- held-back evaluation lists of materials with known outcomes.

Cleaning is deliberately split into small single-purpose passes so each rule
can be tested on its own; `clean_sc` and `clean_catalogue` wire the passes in
the canonical order.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Sequence

import numpy as np

from .formula import Composition, FormulaError, has_unresolved_variables, parse_composition


class Source(Enum):
    SUPERCON = "supercon"
    COD = "cod"
    EVAL_LIST = "eval_list"
    SYNTHETIC_NEGATIVE = "synthetic_negative"


class FamilyLabel(Enum):
    CUPRATE = "cuprate"
    FESC = "fesc"
    CONVENTIONAL = "conventional"


class SchemaMismatchError(ValueError):
    pass


class UnknownFormulaError(ValueError):
    pass


class FoldTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class MaterialRecord:
    """One material row. `composition` is None when the raw formula did not
    yield a concrete composition; `flagged_reason` says why."""

    raw_formula: str
    composition: Composition | None
    tc_kelvin: float | None
    year: int | None
    source: Source
    flagged_reason: str | None = None

    def __post_init__(self):
        if self.tc_kelvin is not None:
            if not math.isfinite(self.tc_kelvin) or self.tc_kelvin < 0.0:
                raise ValueError(f"tc_kelvin must be finite and >= 0, got {self.tc_kelvin}")
        if self.source is Source.SYNTHETIC_NEGATIVE and self.tc_kelvin != 0.0:
            raise ValueError("synthetic negatives must carry tc_kelvin == 0.0")


@dataclass
class IngestReport:
    records: list[MaterialRecord]
    n_rows: int
    n_parsed: int
    n_flagged: int


def make_record(
    raw_formula: str,
    tc_kelvin: float | None,
    year: int | None,
    source: Source,
) -> MaterialRecord:
    """Parse one formula into a record, flagging instead of failing.

    Formulas with unresolved stoichiometry variables, unknown elements, or
    syntax problems produce a record with composition=None and a reason
    string, so nothing is silently dropped at ingest time.
    """
    if has_unresolved_variables(raw_formula):
        return MaterialRecord(
            raw_formula, None, tc_kelvin, year, source, "unresolved_variable"
        )
    try:
        comp = parse_composition(raw_formula)
    except FormulaError as err:
        return MaterialRecord(
            raw_formula, None, tc_kelvin, year, source, type(err).__name__
        )
    return MaterialRecord(raw_formula, comp, tc_kelvin, year, source, None)


def ingest_csv(path, source: Source) -> IngestReport:
    """Read a formula/tc_K/year CSV into records.

    Empty tc_K or year cells become None. A missing `formula` column is a
    schema error; unparseable numeric cells are too (bad data should fail
    loudly, bad formulas get flagged per row).
    """
    records: list[MaterialRecord] = []
    n_rows = n_flagged = 0
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or "formula" not in reader.fieldnames:
            raise SchemaMismatchError(f"{path}: need a 'formula' column, got {reader.fieldnames}")
        for lineno, row in enumerate(reader, start=2):
            n_rows += 1
            raw = (row.get("formula") or "").strip()
            tc_text = (row.get("tc_K") or "").strip()
            year_text = (row.get("year") or "").strip()
            try:
                tc = float(tc_text) if tc_text else None
                year = int(year_text) if year_text else None
            except ValueError as err:
                raise SchemaMismatchError(f"{path}:{lineno}: {err}") from None
            rec = make_record(raw, tc, year, source)
            if rec.flagged_reason is not None:
                n_flagged += 1
            records.append(rec)
    return IngestReport(records, n_rows, n_rows - n_flagged, n_flagged)


def drop_flagged(records: Iterable[MaterialRecord]) -> list[MaterialRecord]:
    return [r for r in records if r.flagged_reason is None]


def dedup_median_tc(records: Sequence[MaterialRecord]) -> list[MaterialRecord]:
    """Collapse records sharing an exact composition to one representative.

    Reported Tc values for nominally identical materials scatter, so the
    survivor takes the median Tc (lower-middle order statistic for even
    group sizes) and the earliest report year. Group order follows first
    appearance; records without a composition pass through untouched.
    """
    groups: dict[str, list[MaterialRecord]] = {}
    order: list[tuple[str, MaterialRecord] | MaterialRecord] = []
    for r in records:
        if r.composition is None:
            order.append(r)
            continue
        key = r.composition.formula()
        if key not in groups:
            groups[key] = []
            order.append((key, r))
        groups[key].append(r)

    out: list[MaterialRecord] = []
    for entry in order:
        if isinstance(entry, MaterialRecord):
            out.append(entry)
            continue
        key, first = entry
        group = groups[key]
        tcs = sorted(r.tc_kelvin for r in group if r.tc_kelvin is not None)
        tc = tcs[(len(tcs) - 1) // 2] if tcs else None
        years = [r.year for r in group if r.year is not None]
        year = min(years) if years else None
        out.append(dataclasses.replace(first, tc_kelvin=tc, year=year))
    return out


def drop_missing_tc(records: Iterable[MaterialRecord]) -> list[MaterialRecord]:
    """Remove measured-superconductor rows with no recorded Tc.

    Only SUPERCON rows are affected: a catalogue row has no Tc by nature
    (it becomes a Tc = 0 negative later), and eval-list rows are judged by
    the evaluation runner.
    """
    return [
        r
        for r in records
        if r.tc_kelvin is not None or r.source is not Source.SUPERCON
    ]


_FESC_PARTNERS = frozenset({"As", "S", "Se", "P"})


def classify_family(composition: Composition) -> FamilyLabel:
    """Coarse material family from composition alone.

    CUPRATE: contains Cu and O plus at least one other element. FESC:
    contains Fe together with As, S, Se, or P. CUPRATE wins when both rules
    fire; everything else is CONVENTIONAL.
    """
    elements = set(composition)
    if "Cu" in elements and "O" in elements and len(elements) >= 3:
        return FamilyLabel.CUPRATE
    if "Fe" in elements and elements & _FESC_PARTNERS:
        return FamilyLabel.FESC
    return FamilyLabel.CONVENTIONAL


def remove_overlap(
    primary: Sequence[MaterialRecord],
    reference: Sequence[MaterialRecord],
    tol: float = 1e-6,
) -> list[MaterialRecord]:
    """Drop primary records whose composition matches any reference record.

    Match means the same element set with every molar fraction within tol,
    so rounded copies of the same material are caught. Records without a
    composition never match anything.
    """
    by_elements: dict[frozenset, list[Composition]] = {}
    for r in reference:
        if r.composition is not None:
            by_elements.setdefault(frozenset(r.composition), []).append(r.composition)

    out = []
    for r in primary:
        if r.composition is not None:
            candidates = by_elements.get(frozenset(r.composition), ())
            if any(r.composition.almost_equal(c, tol=tol) for c in candidates):
                continue
        out.append(r)
    return out


def filter_inorganic(records: Iterable[MaterialRecord]) -> list[MaterialRecord]:
    """Drop likely-organic entries: anything containing both C and H."""
    out = []
    for r in records:
        c = r.composition
        if c is not None and "C" in c and "H" in c:
            continue
        out.append(r)
    return out


def garbage_in(
    cod: Sequence[MaterialRecord],
    known_sc: Sequence[MaterialRecord],
    eval_list: Sequence[MaterialRecord] = (),
    tol: float = 1e-6,
) -> list[MaterialRecord]:
    """Turn catalogue materials into Tc = 0 training rows.

    The vast majority of known inorganic materials are not superconductors
    at any measured temperature, so the catalogue minus everything that is
    (or is being evaluated as) a superconductor serves as the negative
    class. Every surviving row is relabelled with tc_kelvin = 0.0 exactly
    and tagged SYNTHETIC_NEGATIVE.
    """
    usable = [r for r in cod if r.composition is not None]
    usable = remove_overlap(usable, known_sc, tol=tol)
    usable = remove_overlap(usable, eval_list, tol=tol)
    return [
        dataclasses.replace(r, tc_kelvin=0.0, source=Source.SYNTHETIC_NEGATIVE)
        for r in usable
    ]


@dataclass
class TemporalSplit:
    train: list[MaterialRecord]
    held_out: list[MaterialRecord]
    undated: list[MaterialRecord]


def temporal_split(records: Sequence[MaterialRecord], year_cutoff: int) -> TemporalSplit:
    """Split by report year: train strictly before the cutoff.

    Rows without a year can't be placed on either side honestly, so they are
    returned separately rather than guessed at.
    """
    split = TemporalSplit([], [], [])
    for r in records:
        if r.year is None:
            split.undated.append(r)
        elif r.year < year_cutoff:
            split.train.append(r)
        else:
            split.held_out.append(r)
    return split


def remove_named(
    records: Sequence[MaterialRecord], formulas: Iterable[str], tol: float = 1e-6
) -> list[MaterialRecord]:
    """Drop records matching any of the given formulas (tolerant match)."""
    reference = []
    for f in formulas:
        try:
            comp = parse_composition(f)
        except FormulaError as err:
            raise UnknownFormulaError(f"cannot parse removal target {f!r}: {err}") from err
        reference.append(MaterialRecord(f, comp, None, None, Source.EVAL_LIST))
    return remove_overlap(records, reference, tol=tol)


def rotating_folds(
    records: Sequence, fold_size: int, seed: int
) -> list[tuple[list[int], list[int]]]:
    """Partition record indices into shuffled folds of at most fold_size.

    Returns one (train_indices, test_indices) pair per fold; each index
    appears in exactly one test set, so the folds cover everything without
    repetition. The shuffle is fully determined by the seed.
    """
    n = len(records)
    if fold_size < 1:
        raise FoldTooLargeError(f"fold_size must be >= 1, got {fold_size}")
    if fold_size > n:
        raise FoldTooLargeError(f"fold_size {fold_size} exceeds population {n}")
    rng = np.random.default_rng(seed)
    perm = [int(i) for i in rng.permutation(n)]
    folds = []
    for start in range(0, n, fold_size):
        test = perm[start : start + fold_size]
        train = perm[:start] + perm[start + fold_size :]
        folds.append((train, test))
    return folds


def random_split(
    records: Sequence[MaterialRecord], test_fraction: float, seed: int
) -> tuple[list[MaterialRecord], list[MaterialRecord]]:
    """Seeded shuffle split; the test side gets round(n * test_fraction) rows."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(records))
    n_test = int(round(len(records) * test_fraction))
    test_idx = set(int(i) for i in perm[:n_test])
    train = [r for i, r in enumerate(records) if i not in test_idx]
    test = [r for i, r in enumerate(records) if i in test_idx]
    return train, test


def clean_sc(records: Sequence[MaterialRecord]) -> list[MaterialRecord]:
    """Canonical cleaning for measured-superconductor tables:
    drop unparseable rows, collapse duplicates to the median Tc, then drop
    rows that never had a Tc."""
    return drop_missing_tc(dedup_median_tc(drop_flagged(records)))


def clean_catalogue(records: Sequence[MaterialRecord]) -> list[MaterialRecord]:
    """Canonical cleaning for the inorganic catalogue: drop unparseable rows
    and organics, then collapse exact duplicates (Tc is irrelevant here, the
    rows become Tc = 0 negatives later)."""
    return dedup_median_tc(filter_inorganic(drop_flagged(records)))


def composition_key(record: MaterialRecord) -> str:
    """Exact-identity key used for leakage checks."""
    if record.composition is None:
        raise ValueError(f"record {record.raw_formula!r} has no composition")
    return record.composition.formula()


def dataset_fingerprint(records: Sequence[MaterialRecord]) -> str:
    """Order-independent sha256 over the material content of a record list."""
    lines = []
    for r in records:
        comp = r.composition.formula() if r.composition is not None else ""
        tc = "" if r.tc_kelvin is None else f"{r.tc_kelvin:.9g}"
        year = "" if r.year is None else str(r.year)
        lines.append(f"{r.raw_formula}\x1f{comp}\x1f{tc}\x1f{year}\x1f{r.source.value}")
    digest = hashlib.sha256()
    for line in sorted(lines):
        digest.update(line.encode())
        digest.update(b"\n")
    return digest.hexdigest()


def write_records_csv(records: Sequence[MaterialRecord], path) -> None:
    """Write records back out in the ingest schema plus bookkeeping columns."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["formula", "tc_K", "year", "source", "family", "flagged_reason"])
        for r in records:
            family = "" if r.composition is None else classify_family(r.composition).value
            w.writerow(
                [
                    r.raw_formula,
                    "" if r.tc_kelvin is None else f"{r.tc_kelvin:.9g}",
                    "" if r.year is None else r.year,
                    r.source.value,
                    family,
                    r.flagged_reason or "",
                ]
            )


def apply_filter(
    records: Iterable[MaterialRecord], predicate: Callable[[MaterialRecord], bool]
) -> list[MaterialRecord]:
    return [r for r in records if predicate(r)]
