"""CSV ingestion driven by a column schema file.

Schema files are YAML::

    label_column: label
    label_values:            # optional; these are the defaults
      benign: [benign, BENIGN, normal, "0"]
      attack: [attack, ATTACK, "1"]
    columns:
      cpu_usage: numeric
      protocol: nominal-categorical
      severity: {role: ordinal-categorical, categories: [low, medium, high]}
      session_id: dropped

The label column may be omitted from ``columns``.  Every CSV header name must
appear in the schema and vice versa.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from ..errors import ConfigurationError, IngestionError

MISSING_TOKENS = frozenset({"", "NA", "NaN"})

ROLES = ("numeric", "ordinal-categorical", "nominal-categorical", "label", "dropped")
_ROLE_ALIASES = {"ordinal": "ordinal-categorical", "nominal": "nominal-categorical"}

DEFAULT_BENIGN = ("benign", "BENIGN", "Benign", "normal", "0")
DEFAULT_ATTACK = ("attack", "ATTACK", "Attack", "malicious", "1")


@dataclass(frozen=True)
class ColumnSpec:
    role: str
    categories: tuple[str, ...] | None = None

    @property
    def categorical(self) -> bool:
        return self.role in ("ordinal-categorical", "nominal-categorical")


@dataclass(frozen=True)
class FeatureSchema:
    columns: dict[str, ColumnSpec]
    label_column: str
    benign_values: tuple[str, ...] = DEFAULT_BENIGN
    attack_values: tuple[str, ...] = DEFAULT_ATTACK

    def __post_init__(self) -> None:
        labels = [n for n, c in self.columns.items() if c.role == "label"]
        if labels != [self.label_column]:
            raise ConfigurationError(
                f"schema needs exactly one label column, found {labels or 'none'}"
            )
        for name, col in self.columns.items():
            if col.role not in ROLES:
                raise ConfigurationError(f"column {name!r}: unknown role {col.role!r}")
            if col.categories is not None and len(set(col.categories)) != len(col.categories):
                raise ConfigurationError(f"column {name!r}: duplicate categories")
        overlap = set(self.benign_values) & set(self.attack_values)
        if overlap:
            raise ConfigurationError(f"label values mapped to both classes: {sorted(overlap)}")

    @property
    def names(self) -> list[str]:
        return list(self.columns)


@dataclass
class RawTable:
    """Parsed columns before encoding.

    Numeric columns are float arrays with NaN for missing cells; categorical and
    dropped columns are object arrays with ``None`` for missing.  The label
    column is already mapped to 0/1.
    """

    columns: dict[str, np.ndarray]
    kinds: dict[str, str]
    label_column: str
    source: str = "<memory>"
    duplicates_removed: int = field(default=0)

    def __post_init__(self) -> None:
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ConfigurationError(f"columns have unequal lengths {sorted(lengths)}")

    def __len__(self) -> int:
        return len(self.columns[self.label_column])


def schema_from_dict(raw: dict) -> FeatureSchema:
    if not isinstance(raw, dict):
        raise ConfigurationError("schema must be a mapping")
    unknown = set(raw) - {"label_column", "label_values", "columns"}
    if unknown:
        raise ConfigurationError(f"unknown schema keys: {sorted(unknown)}")
    try:
        label = raw["label_column"]
        cols_raw = raw["columns"]
    except KeyError as exc:
        raise ConfigurationError(f"schema missing key {exc.args[0]!r}") from None
    columns: dict[str, ColumnSpec] = {}
    for name, entry in (cols_raw or {}).items():
        if isinstance(entry, str):
            role, cats = entry, None
        elif isinstance(entry, dict):
            extra = set(entry) - {"role", "categories"}
            if extra:
                raise ConfigurationError(f"column {name!r}: unknown keys {sorted(extra)}")
            role = entry.get("role", "")
            cats = entry.get("categories")
            cats = None if cats is None else tuple(str(c) for c in cats)
        else:
            raise ConfigurationError(f"column {name!r}: expected a role string or mapping")
        columns[str(name)] = ColumnSpec(_ROLE_ALIASES.get(role, role), cats)
    if label not in columns:
        columns[label] = ColumnSpec("label")
    values = raw.get("label_values") or {}
    return FeatureSchema(
        columns,
        label,
        tuple(str(v) for v in values.get("benign", DEFAULT_BENIGN)),
        tuple(str(v) for v in values.get("attack", DEFAULT_ATTACK)),
    )


def load_schema(path) -> FeatureSchema:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot read schema {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise IngestionError(f"schema {path} is not valid YAML: {exc}") from exc
    return schema_from_dict(raw)


def load_csv(path, schema: FeatureSchema) -> RawTable:
    """Parse a CSV file against ``schema`` and drop exact duplicate rows."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = [h.strip() for h in next(reader)]
            except StopIteration:
                raise IngestionError(f"{path}: file is empty") from None
            rows = list(reader)
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    except (UnicodeDecodeError, csv.Error) as exc:
        raise IngestionError(f"{path}: malformed CSV: {exc}") from exc

    missing = [n for n in schema.names if n not in header]
    extra = [n for n in header if n not in schema.columns]
    if missing or extra or len(set(header)) != len(header):
        raise IngestionError(
            f"{path}: header mismatch (missing {missing}, unexpected {extra})"
        )

    label_map = {v: 0 for v in schema.benign_values}
    label_map.update({v: 1 for v in schema.attack_values})

    seen: set[tuple] = set()
    kept: list[tuple] = []
    dupes = 0
    for lineno, row in enumerate(rows, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise IngestionError(
                f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
            )
        parsed = []
        for name, cell in zip(header, row):
            cell = cell.strip()
            role = schema.columns[name].role
            if role == "label":
                if cell not in label_map:
                    raise IngestionError(
                        f"{path}:{lineno}: column {name!r}: unmapped label value {cell!r}"
                    )
                parsed.append(label_map[cell])
            elif cell in MISSING_TOKENS:
                parsed.append(None)
            elif role == "numeric":
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise IngestionError(
                        f"{path}:{lineno}: column {name!r}: not a number: {cell!r}"
                    ) from None
            else:
                parsed.append(cell)
        key = tuple(parsed)
        if key in seen:
            dupes += 1
            continue
        seen.add(key)
        kept.append(key)

    columns: dict[str, np.ndarray] = {}
    kinds: dict[str, str] = {}
    for j, name in enumerate(header):
        role = schema.columns[name].role
        vals = [r[j] for r in kept]
        if role == "numeric":
            columns[name] = np.array([np.nan if v is None else v for v in vals], dtype=np.float64)
            kinds[name] = "numeric"
        elif role == "label":
            columns[name] = np.array(vals, dtype=np.int64)
            kinds[name] = "label"
        else:
            columns[name] = np.array(vals, dtype=object)
            kinds[name] = "categorical" if schema.columns[name].categorical else "dropped"
    # schema order, not file order
    ordered = {n: columns[n] for n in schema.names}
    return RawTable(ordered, {n: kinds[n] for n in schema.names}, schema.label_column,
                    source=str(path), duplicates_removed=dupes)


def freeze_categories(table: RawTable, schema: FeatureSchema) -> FeatureSchema:
    """Fill in any unset category lists from the observed values, sorted."""
    cols = dict(schema.columns)
    for name, col in cols.items():
        if col.categorical and col.categories is None:
            observed = sorted({v for v in table.columns[name] if v is not None})
            cols[name] = replace(col, categories=tuple(observed))
    return replace(schema, columns=cols)


def write_csv(path, ds, label_column: str = "label") -> None:
    """Write a Dataset as CSV with string labels benign/attack."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([*ds.feature_names, label_column])
        for x, y in zip(ds.features, ds.labels):
            w.writerow([*(repr(float(v)) for v in x), "attack" if y else "benign"])


def numeric_schema(feature_names, label_column: str = "label") -> FeatureSchema:
    cols = {n: ColumnSpec("numeric") for n in feature_names}
    cols[label_column] = ColumnSpec("label")
    return FeatureSchema(cols, label_column)
