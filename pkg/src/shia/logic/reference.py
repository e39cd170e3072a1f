"""Access to the built-in reference chassis netlist."""

from __future__ import annotations

from importlib import resources

from .netlist import Netlist, load_netlist


def reference_netlist_text() -> str:
    return (resources.files("shia.logic") / "data" / "reference.yaml").read_text("utf-8")


def reference_netlist() -> Netlist:
    return load_netlist(reference_netlist_text())
