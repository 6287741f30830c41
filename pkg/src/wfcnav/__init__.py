"""Procedural navigation worlds and evaluation tooling for hierarchical navigation controllers."""

__version__ = "0.1.0"
