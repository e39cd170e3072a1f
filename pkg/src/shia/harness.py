"""Staged verification engine.

Sweeps drive all 32 input combinations through the model server, either
against the in-process model (MOM) or against an emulated board over a
transport (MRM), and capture the steady outputs as truth tables. Tables
convert to five-variable Karnaugh maps (one per output pin, two Gray-coded
4x4 grids split on pin 5), and subtracting two maps localises any
behavioural discrepancy; an all-zero difference is the pass verdict.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

from .board_server import BoardServer, FaultSpec
from .clock import Clock, VirtualClock
from .logic.netlist import Netlist
from .logic.oracle import oracle_eval
from .logic.signals import N_PINS, Level, Vector, all_vectors, vector_to_int
from .model_server import (
    STATUS_SESSION_FAULT,
    Mode,
    ModelServer,
    pin_event,
    set_mode,
)
from .protocol import DEFAULT_SERIAL, SerialConfig
from .transport import Transcript, open_loopback

PROVENANCES = ("MOM", "MRM", "oracle")

# Extra settling margin per sweep step, on top of the reply delay and one
# board poll period.
SETTLE_MARGIN_MS = 50


class IncompleteTableError(ValueError):
    """Operation requires a complete 32-row table."""


@dataclass(frozen=True)
class TruthTable:
    """32 rows of (input vector -> output vector), in ascending input order.

    Failed rows (e.g. reply timeouts during an MRM sweep) carry ``None``
    outputs and are listed in ``failed_rows``.
    """

    provenance: str
    netlist_id: str
    timestamp_ms: int
    rows: tuple[tuple[Vector, Vector | None], ...]
    failed_rows: tuple[int, ...] = ()

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"provenance must be one of {PROVENANCES}")
        if len(self.rows) != 2**N_PINS:
            raise ValueError(f"truth table must have {2**N_PINS} rows, got {len(self.rows)}")
        for i, (inputs, _) in enumerate(self.rows):
            if vector_to_int(inputs) != i:
                raise ValueError(f"row {i} out of order: {inputs}")

    @property
    def complete(self) -> bool:
        return not self.failed_rows

    def outputs_for(self, v: Vector) -> Vector | None:
        return self.rows[vector_to_int(v)][1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow([f"in{i}" for i in range(1, N_PINS + 1)]
                        + [f"out{i}" for i in range(1, N_PINS + 1)])
        for inputs, outputs in self.rows:
            out_cells = ["-"] * N_PINS if outputs is None else [int(b) for b in outputs]
            writer.writerow([int(b) for b in inputs] + out_cells)
        return buf.getvalue()


def oracle_table(net: Netlist, timestamp_ms: int = 0) -> TruthTable:
    """Ground-truth table straight from the pure Boolean evaluator."""
    rows = tuple((v, oracle_eval(net, v)) for v in all_vectors())
    return TruthTable("oracle", net.name, timestamp_ms, rows)


def _events_towards(current: Vector, target: Vector):
    """Single-pin events turning ``current`` into ``target``, pin order."""
    return [
        pin_event(i + 1, target[i]) for i in range(N_PINS) if current[i] != target[i]
    ]


def mom_sweep(net: Netlist, clock: Clock | None = None) -> TruthTable:
    """Drive all 32 vectors through a model-only server and record outputs."""
    clock = clock or VirtualClock()
    server = ModelServer(net, clock)
    server.start()
    rows = []
    for v in all_vectors():
        for ev in _events_towards(server.snapshot().inputs, v):
            server.post_event(ev)
        rows.append((v, server.snapshot().outputs))
    return TruthTable("MOM", net.name, clock.now(), tuple(rows))


@dataclass
class MrmSession:
    """A wired model-server session; the board may be in-process (loopback)
    or remote, in which case only the model side is held here."""

    model: ModelServer
    board: BoardServer | None
    clock: Clock
    transcript: Transcript
    delay_ms: int
    poll_hz: int
    latency_ms: int

    @property
    def settle_ms(self) -> int:
        return self.delay_ms + round(1000 / self.poll_hz) + SETTLE_MARGIN_MS

    def settle(self) -> None:
        self.clock.wait_until(self.clock.now() + self.settle_ms)

    def close(self) -> None:
        if self.board is not None:
            self.board.stop()


def open_loopback_session(
    net: Netlist,
    clock: Clock,
    *,
    board_circuit: Netlist | None = None,
    faults: tuple[FaultSpec, ...] = (),
    delay_ms: int = 500,
    poll_hz: int = 10,
    latency_ms: int = 0,
    config: SerialConfig = DEFAULT_SERIAL,
) -> MrmSession:
    """Assemble a loopback MRM session: board served, model in MRM.

    The mode switch resynchronises all five input attributes; call
    ``session.settle()`` (the sweep does) before trusting the lamps.
    """
    transcript = Transcript()
    model_ep, board_ep = open_loopback(
        clock, config, latency_ms, transcript, sides=("model", "board")
    )
    board = BoardServer(board_circuit or net, clock, faults=faults)
    board.serve(board_ep, poll_hz)
    period_ms = round(1000 / poll_hz)
    model = ModelServer(
        net,
        clock,
        delay_ms=delay_ms,
        reply_timeout_ms=max(2 * delay_ms, 2 * period_ms, 250),
    )
    model.attach(model_ep)
    model.start()
    model.post_event(set_mode(Mode.MRM))
    return MrmSession(model, board, clock, transcript, delay_ms, poll_hz, latency_ms)


def mrm_sweep(session: MrmSession) -> TruthTable:
    """Drive all 32 vectors through a live MRM session and record outputs.

    Each row issues only the pin events that differ from the current state,
    then waits one settle interval (delay + poll period + margin) before
    reading the lamps. Rows that hit a reply timeout or session fault are
    marked failed and the sweep continues.
    """
    model, clock = session.model, session.clock
    session.settle()  # let the mode-switch resynchronisation finish
    rows: list[tuple[Vector, Vector | None]] = []
    failed: list[int] = []
    for i, v in enumerate(all_vectors()):
        timeouts_before = model.timeout_count
        events = _events_towards(model.snapshot().inputs, v)
        for ev in events:
            model.post_event(ev)
        if events:
            session.settle()
        snap = model.snapshot()
        if model.timeout_count > timeouts_before or snap.status == STATUS_SESSION_FAULT:
            failed.append(i)
            rows.append((v, None))
        else:
            rows.append((v, snap.outputs))
    return TruthTable("MRM", model.net.name, clock.now(), tuple(rows), tuple(failed))


# -- Karnaugh maps -----------------------------------------------------------

# Gray-code order for a two-variable axis.
GRAY2 = ((0, 0), (0, 1), (1, 1), (1, 0))
GRAY_LABELS = tuple(f"{a}{b}" for a, b in GRAY2)

Grid = tuple[tuple[int, ...], ...]


def _cell_vector(row: int, col: int, pin5: int) -> Vector:
    p1, p2 = GRAY2[row]
    p3, p4 = GRAY2[col]
    return (Level(p1), Level(p2), Level(p3), Level(p4), Level(pin5))


@dataclass(frozen=True)
class KarnaughMap:
    """Five-variable map for one output pin: rows Gray-code pins (1,2),
    columns pins (3,4), and the two grids split on pin 5."""

    output_pin: int
    provenance: str
    low_grid: Grid  # pin 5 low
    high_grid: Grid  # pin 5 high

    def cell(self, v: Vector) -> int:
        grid = self.high_grid if v[4] else self.low_grid
        row = GRAY2.index((int(v[0]), int(v[1])))
        col = GRAY2.index((int(v[2]), int(v[3])))
        return grid[row][col]


def build_kmap(table: TruthTable, pin: int) -> KarnaughMap:
    """Place each table row at its Gray-coded cell for one output pin."""
    if not 1 <= pin <= N_PINS:
        raise ValueError(f"output pin must be 1..{N_PINS}, got {pin}")
    if not table.complete:
        raise IncompleteTableError(
            f"table has {len(table.failed_rows)} failed row(s); cannot build a map"
        )
    grids = []
    for pin5 in (0, 1):
        grid = tuple(
            tuple(
                int(table.outputs_for(_cell_vector(row, col, pin5))[pin - 1])
                for col in range(4)
            )
            for row in range(4)
        )
        grids.append(grid)
    return KarnaughMap(pin, table.provenance, grids[0], grids[1])


def kmaps_for(table: TruthTable) -> list[KarnaughMap]:
    return [build_kmap(table, pin) for pin in range(1, N_PINS + 1)]


def table_rows_from_kmaps(maps: list[KarnaughMap]) -> tuple[tuple[Vector, Vector], ...]:
    """Reconstruct truth-table rows from one map per output pin."""
    if sorted(m.output_pin for m in maps) != list(range(1, N_PINS + 1)):
        raise ValueError("need exactly one map per output pin 1..5")
    by_pin = {m.output_pin: m for m in maps}
    rows = []
    for v in all_vectors():
        rows.append((v, tuple(Level(by_pin[p].cell(v)) for p in range(1, N_PINS + 1))))
    return tuple(rows)


@dataclass(frozen=True)
class DiffMap:
    """Cellwise subtraction of two maps for the same output pin."""

    output_pin: int
    provenance_a: str
    provenance_b: str
    low_grid: Grid  # values in -1..1
    high_grid: Grid

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for grid in (self.low_grid, self.high_grid) for row in grid for c in row)

    def nonzero_cells(self) -> list[tuple[Vector, int]]:
        cells = []
        for pin5, grid in ((0, self.low_grid), (1, self.high_grid)):
            for row in range(4):
                for col in range(4):
                    if grid[row][col] != 0:
                        cells.append((_cell_vector(row, col, pin5), grid[row][col]))
        cells.sort(key=lambda item: vector_to_int(item[0]))
        return cells


def diff_kmaps(a: KarnaughMap, b: KarnaughMap) -> DiffMap:
    """Cellwise a - b; refused unless both maps cover the same output pin."""
    if a.output_pin != b.output_pin:
        raise ValueError(
            f"cannot diff maps for different pins ({a.output_pin} vs {b.output_pin})"
        )
    def sub(ga: Grid, gb: Grid) -> Grid:
        return tuple(
            tuple(ca - cb for ca, cb in zip(ra, rb)) for ra, rb in zip(ga, gb)
        )
    return DiffMap(
        a.output_pin,
        a.provenance,
        b.provenance,
        sub(a.low_grid, b.low_grid),
        sub(a.high_grid, b.high_grid),
    )


# -- rendering and report emission -------------------------------------------


def _render_grids(title: str, low: Grid, high: Grid, width: int = 3) -> str:
    lines = [title]
    header = "in1,in2 \\ in3,in4  " + "  ".join(
        f"{label:>{width}}" for label in GRAY_LABELS
    )
    for pin5, grid in ((0, low), (1, high)):
        lines.append(f"  in5 = {pin5}")
        lines.append("  " + header)
        for row in range(4):
            cells = "  ".join(f"{grid[row][col]:>{width}}" for col in range(4))
            lines.append(f"  {GRAY_LABELS[row]:>17}  {cells}")
    return "\n".join(lines) + "\n"


def render_kmap(m: KarnaughMap) -> str:
    return _render_grids(f"output pin {m.output_pin} ({m.provenance})", m.low_grid, m.high_grid)


def render_diff(d: DiffMap) -> str:
    verdict = "zero" if d.is_zero else "NONZERO"
    return _render_grids(
        f"output pin {d.output_pin} ({d.provenance_a} - {d.provenance_b}): {verdict}",
        d.low_grid,
        d.high_grid,
    )


def _kmap_json(m: KarnaughMap) -> dict:
    return {
        "output_pin": m.output_pin,
        "provenance": m.provenance,
        "row_gray": list(GRAY_LABELS),
        "col_gray": list(GRAY_LABELS),
        "low_grid": [list(r) for r in m.low_grid],
        "high_grid": [list(r) for r in m.high_grid],
    }


def _diff_json(d: DiffMap) -> dict:
    return {
        "output_pin": d.output_pin,
        "a": d.provenance_a,
        "b": d.provenance_b,
        "is_zero": d.is_zero,
        "low_grid": [list(r) for r in d.low_grid],
        "high_grid": [list(r) for r in d.high_grid],
        "nonzero_cells": [
            {"inputs": [int(b) for b in v], "diff": delta} for v, delta in d.nonzero_cells()
        ],
    }


def emit_report(
    destination,
    tables: list[TruthTable],
    maps: dict[str, list[KarnaughMap]] | None = None,
    diffs: list[DiffMap] | None = None,
    run_info: dict | None = None,
) -> list[Path]:
    """Write tables, maps, and diffs under ``destination``.

    Truth tables go to CSV, maps and diffs to both aligned plain-text grids
    and JSON; ``report.json`` summarises provenance, netlist identity, the
    timing configuration, and the diff verdict. Maps default to being built
    from every complete table. Refuses an empty artifact list.
    """
    if not tables and not diffs:
        raise ValueError("nothing to report: no tables and no diffs")
    dest = Path(destination)
    dest.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if maps is None:
        maps = {t.provenance: kmaps_for(t) for t in tables if t.complete}

    summary: dict = {
        "netlist": tables[0].netlist_id if tables else None,
        "run": run_info or {},
        "tables": [],
        "diff": None,
    }

    def write(path: Path, text: str) -> None:
        path.write_text(text, encoding="utf-8")
        written.append(path)

    for table in tables:
        name = f"truth_table_{table.provenance.lower()}.csv"
        write(dest / name, table.to_csv())
        summary["tables"].append(
            {
                "provenance": table.provenance,
                "file": name,
                "netlist": table.netlist_id,
                "timestamp_ms": table.timestamp_ms,
                "complete": table.complete,
                "failed_rows": list(table.failed_rows),
            }
        )

    for provenance, pin_maps in maps.items():
        text = "\n".join(render_kmap(m) for m in pin_maps)
        write(dest / f"kmap_{provenance.lower()}.txt", text)
        write(
            dest / f"kmap_{provenance.lower()}.json",
            json.dumps([_kmap_json(m) for m in pin_maps], indent=2, sort_keys=True) + "\n",
        )

    if diffs:
        text = "\n".join(render_diff(d) for d in diffs)
        write(dest / "diff.txt", text)
        write(
            dest / "diff.json",
            json.dumps([_diff_json(d) for d in diffs], indent=2, sort_keys=True) + "\n",
        )
        summary["diff"] = {
            "file": "diff.json",
            "is_zero_all": all(d.is_zero for d in diffs),
            "per_pin": {str(d.output_pin): d.is_zero for d in diffs},
        }

    write(dest / "report.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return written
