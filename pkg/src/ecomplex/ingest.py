"""Firm and panel ingestion, activity windows, and yearly count matrices.

Firms CSV header::

    firm_id,region,industry,list_date,delist_date

Panel CSV header::

    region,year,gdp_pc,population,urbanization,schooling,innovation,trade,ricu,ricr

Dates are ISO ``YYYY-MM-DD``; blank panel cells are missing values.
"""

import csv
import datetime as dt
import math
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from .errors import (
    BlankLabel,
    DuplicateFirmId,
    DuplicateKey,
    EmptyYear,
    MalformedDate,
    MissingColumn,
    NonNumericCell,
    OrderViolation,
    ParseError,
)

FIRM_COLUMNS = ("firm_id", "region", "industry", "list_date", "delist_date")
PANEL_COLUMNS = (
    "region",
    "year",
    "gdp_pc",
    "population",
    "urbanization",
    "schooling",
    "innovation",
    "trade",
    "ricu",
    "ricr",
)
PANEL_VALUES = PANEL_COLUMNS[2:]
FRACTION_COLUMNS = ("urbanization", "schooling")
COUNT_COLUMNS = ("year", "region", "industry", "count")


@dataclass(frozen=True)
class FirmRecord:
    firm_id: str
    region: str
    industry: str
    list_date: dt.date
    delist_date: Optional[dt.date] = None

    def __post_init__(self):
        if not self.region or not self.industry:
            raise ValueError(f"firm {self.firm_id!r}: region and industry must be non-empty")
        if self.delist_date is not None and self.delist_date <= self.list_date:
            raise OrderViolation(
                f"firm {self.firm_id!r}: delist_date {self.delist_date} "
                f"is not after list_date {self.list_date}"
            )


@dataclass(frozen=True, eq=False)
class CountMatrix:
    """Firm counts for one year, regions as rows and industries as columns."""

    year: int
    regions: tuple
    industries: tuple
    counts: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "regions", tuple(self.regions))
        object.__setattr__(self, "industries", tuple(self.industries))
        if counts.shape != (len(self.regions), len(self.industries)):
            raise ValueError(
                f"counts shape {counts.shape} does not match "
                f"{len(self.regions)} regions x {len(self.industries)} industries"
            )
        if len(set(self.regions)) != len(self.regions):
            raise ValueError("duplicate region labels")
        if len(set(self.industries)) != len(self.industries):
            raise ValueError("duplicate industry labels")
        if (counts < 0).any():
            raise ValueError("counts must be nonnegative")
        if not (counts > 0).any():
            raise ValueError("count matrix has no positive entry")

    @property
    def shape(self):
        return self.counts.shape

    def __eq__(self, other):
        if not isinstance(other, CountMatrix):
            return NotImplemented
        return (
            self.year == other.year
            and self.regions == other.regions
            and self.industries == other.industries
            and np.array_equal(self.counts, other.counts)
        )

    def __repr__(self):
        return (
            f"CountMatrix(year={self.year}, {len(self.regions)} regions x "
            f"{len(self.industries)} industries, total={int(self.counts.sum())})"
        )


class PanelTable:
    """Region-year macro indicators, indexed by ``(region, year)``.

    Missing cells are NaN and stay NaN; nothing is imputed.
    """

    def __init__(self, frame):
        frame = frame.copy()
        if list(frame.index.names) != ["region", "year"]:
            frame = frame.set_index(["region", "year"])
        if frame.index.has_duplicates:
            dup = frame.index[frame.index.duplicated()][0]
            raise DuplicateKey(f"duplicate panel key {dup}")
        for col in PANEL_VALUES:
            if col not in frame.columns:
                frame[col] = np.nan
        frame = frame[list(PANEL_VALUES)].astype(float)
        values = frame.to_numpy()
        if np.isinf(values).any():
            raise ValueError("panel values must be finite")
        for col in FRACTION_COLUMNS:
            present = frame[col].dropna()
            if ((present < 0) | (present > 1)).any():
                raise ValueError(f"panel column {col!r} must lie in [0, 1]")
        self.frame = frame.sort_index()

    def __len__(self):
        return len(self.frame)

    def __contains__(self, key):
        return key in self.frame.index

    def get(self, region, year, column):
        try:
            value = self.frame.at[(region, year), column]
        except KeyError:
            return math.nan
        return float(value)

    @property
    def years(self):
        return sorted(set(self.frame.index.get_level_values("year")))

    @property
    def regions(self):
        return sorted(set(self.frame.index.get_level_values("region")))


def _check_header(fieldnames, required, path):
    if fieldnames is None:
        raise MissingColumn("empty file, header row expected", path=path, line=1)
    missing = [c for c in required if c not in fieldnames]
    if missing:
        raise MissingColumn(f"missing column(s) {', '.join(missing)}", path=path, line=1)


def _parse_date(text, path, line, column):
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise MalformedDate(f"not an ISO date: {text!r}", path=path, line=line, column=column) from None


def parse_firm_records(path):
    """Read a firms CSV into a list of :class:`FirmRecord`, preserving row order."""
    path = Path(path)
    records = []
    seen = {}
    blank_lines = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader.fieldnames, FIRM_COLUMNS, path)
        for row in reader:
            line = reader.line_num
            firm_id = (row["firm_id"] or "").strip()
            region = (row["region"] or "").strip()
            industry = (row["industry"] or "").strip()
            if not region or not industry:
                blank_lines.append(line)
                continue
            if firm_id in seen:
                raise DuplicateFirmId(
                    f"firm_id {firm_id!r} already defined on line {seen[firm_id]}",
                    path=path,
                    line=line,
                    column="firm_id",
                )
            seen[firm_id] = line
            listed = _parse_date(row["list_date"] or "", path, line, "list_date")
            delist_text = (row["delist_date"] or "").strip()
            delisted = _parse_date(delist_text, path, line, "delist_date") if delist_text else None
            if delisted is not None and delisted <= listed:
                raise OrderViolation(
                    f"delist_date {delisted} is not after list_date {listed}",
                    path=path,
                    line=line,
                    column="delist_date",
                )
            records.append(FirmRecord(firm_id, region, industry, listed, delisted))
    if blank_lines:
        raise BlankLabel(
            f"{len(blank_lines)} row(s) with blank region or industry "
            f"(lines {', '.join(map(str, blank_lines[:10]))}"
            f"{', ...' if len(blank_lines) > 10 else ''})",
            path=path,
            lines=blank_lines,
        )
    return records


def is_active(record, year):
    """A firm counts in ``year`` if listed by then and not delisted in or before it."""
    if record.list_date.year > year:
        return False
    return record.delist_date is None or record.delist_date.year > year


def build_count_matrix(records, year):
    """Count active firms per (region, industry); labels sorted lexicographically."""
    tally = Counter((r.region, r.industry) for r in records if is_active(r, year))
    if not tally:
        raise EmptyYear(f"no active firms in {year}")
    regions = sorted({p for p, _ in tally})
    industries = sorted({i for _, i in tally})
    row = {p: k for k, p in enumerate(regions)}
    col = {i: k for k, i in enumerate(industries)}
    counts = np.zeros((len(regions), len(industries)), dtype=np.int64)
    for (p, i), c in tally.items():
        counts[row[p], col[i]] = c
    return CountMatrix(year, regions, industries, counts)


def parse_panel(path):
    """Read a panel CSV into a :class:`PanelTable`. Blank cells become NaN."""
    path = Path(path)
    rows = []
    keys = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader.fieldnames, ("region", "year"), path)
        present = [c for c in PANEL_VALUES if c in reader.fieldnames]
        for row in reader:
            line = reader.line_num
            region = (row["region"] or "").strip()
            if not region:
                raise ParseError("blank region", path=path, line=line, column="region")
            try:
                year = int((row["year"] or "").strip())
            except ValueError:
                raise NonNumericCell(
                    f"year is not an integer: {row['year']!r}", path=path, line=line, column="year"
                ) from None
            if (region, year) in keys:
                raise DuplicateKey(
                    f"key ({region}, {year}) already defined on line {keys[(region, year)]}",
                    path=path,
                    line=line,
                )
            keys[(region, year)] = line
            entry = {"region": region, "year": year}
            for col in present:
                text = (row[col] or "").strip()
                if not text:
                    entry[col] = math.nan
                    continue
                try:
                    value = float(text)
                except ValueError:
                    value = math.nan
                    text = None
                if text is None or not math.isfinite(value):
                    raise NonNumericCell(
                        f"not a finite number: {row[col]!r}", path=path, line=line, column=col
                    )
                if col in FRACTION_COLUMNS and not 0.0 <= value <= 1.0:
                    raise ParseError(f"fraction out of [0, 1]: {value}", path=path, line=line, column=col)
                entry[col] = value
            rows.append(entry)
    frame = pd.DataFrame(rows, columns=list(PANEL_COLUMNS))
    frame["year"] = frame["year"].astype(int)
    return PanelTable(frame)


def write_count_matrix(matrix, path):
    """Write every cell (zeros included) as ``year,region,industry,count`` rows."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COUNT_COLUMNS)
        for a, region in enumerate(matrix.regions):
            for b, industry in enumerate(matrix.industries):
                writer.writerow((matrix.year, region, industry, int(matrix.counts[a, b])))


def read_count_matrix(path):
    path = Path(path)
    regions, industries, cells = [], [], {}
    year = None
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader.fieldnames, COUNT_COLUMNS, path)
        for row in reader:
            y = int(row["year"])
            if year is None:
                year = y
            elif y != year:
                raise ParseError(f"mixed years {year} and {y}", path=path, line=reader.line_num)
            p, i = row["region"], row["industry"]
            if p not in cells:
                regions.append(p)
                cells[p] = {}
            if i not in industries:
                industries.append(i)
            cells[p][i] = int(row["count"])
    if year is None:
        raise ParseError("no rows", path=path)
    counts = [[cells[p].get(i, 0) for i in industries] for p in regions]
    return CountMatrix(year, regions, industries, counts)


def load_provinces():
    """Two-letter province codes mapped to names, in the reference table's order."""
    text = resources.files("ecomplex").joinpath("data/provinces.csv").read_text(encoding="utf-8")
    return {row["code"]: row["name"] for row in csv.DictReader(text.splitlines())}
