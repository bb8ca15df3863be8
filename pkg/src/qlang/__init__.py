"""Typed quantum circuit-description toolchain."""
