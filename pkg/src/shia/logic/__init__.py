"""Executable logic-chassis model: gates, splitters, netlists, evaluation."""

from .engine import NonQuiescentError, Simulation, settle
from .gates import (
    ArityError,
    BlockInstance,
    GateKind,
    UnknownPortError,
    eval_gate,
    step_block,
)
from .netlist import (
    BlockDecl,
    Connector,
    Netlist,
    NetlistError,
    NetlistParseError,
    NetlistValidationError,
    Port,
    dump_netlist,
    load_netlist,
    parse_netlist,
    read_netlist,
    validate_netlist,
)
from .oracle import oracle_eval, port_levels, topo_order
from .reference import reference_netlist, reference_netlist_text
from .signals import (
    ALL_LOW,
    HIGH,
    LOW,
    N_PINS,
    Level,
    Vector,
    all_vectors,
    vector,
    vector_from_int,
    vector_to_int,
)

__all__ = [
    "ALL_LOW",
    "ArityError",
    "BlockDecl",
    "BlockInstance",
    "Connector",
    "GateKind",
    "HIGH",
    "LOW",
    "Level",
    "N_PINS",
    "Netlist",
    "NetlistError",
    "NetlistParseError",
    "NetlistValidationError",
    "NonQuiescentError",
    "Port",
    "Simulation",
    "UnknownPortError",
    "Vector",
    "all_vectors",
    "dump_netlist",
    "eval_gate",
    "load_netlist",
    "oracle_eval",
    "parse_netlist",
    "port_levels",
    "read_netlist",
    "reference_netlist",
    "reference_netlist_text",
    "settle",
    "step_block",
    "topo_order",
    "validate_netlist",
    "vector",
    "vector_from_int",
    "vector_to_int",
]
