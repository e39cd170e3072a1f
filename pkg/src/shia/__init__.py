"""Software-emulated hardware-in-the-loop verification of a logic chassis.

An executable netlist model, a two-character pin-message protocol, paired
model-side and board-side servers, and a truth-table / Karnaugh-map
harness that proves (or localises the absence of) behavioural equivalence
between the model and an emulated board.
"""

from .board_server import BoardServer, DuplicateFaultError, FaultKind, FaultSpec, GpioMap
from .clock import ClockModeError, RealClock, VirtualClock, advance, sleep_until
from .harness import (
    DiffMap,
    IncompleteTableError,
    KarnaughMap,
    MrmSession,
    TruthTable,
    build_kmap,
    diff_kmaps,
    emit_report,
    kmaps_for,
    mom_sweep,
    mrm_sweep,
    open_loopback_session,
    oracle_table,
)
from .logic import (
    GateKind,
    Level,
    Netlist,
    NetlistError,
    NetlistValidationError,
    Simulation,
    all_vectors,
    dump_netlist,
    eval_gate,
    load_netlist,
    oracle_eval,
    read_netlist,
    reference_netlist,
    settle,
    step_block,
    validate_netlist,
)
from .model_server import (
    HarnessEvent,
    Mode,
    ModelServer,
    SessionError,
    Snapshot,
    pin_event,
    pin_high,
    pin_low,
    set_mode,
)
from .panel_service import PanelService
from .protocol import (
    DEFAULT_SERIAL,
    Direction,
    FrameStream,
    InvalidLevelError,
    InvalidPinError,
    MalformedFrameError,
    PinMessage,
    ProtocolError,
    SerialConfig,
    TruncatedFrameError,
    decode_pin_message,
    encode_pin_message,
)
from .transport import (
    StreamClosedError,
    Transcript,
    connect_stream,
    listen_stream,
    open_loopback,
)

__version__ = "0.1.0"
