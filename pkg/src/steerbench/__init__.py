"""Benchmark harness for steering LLMs between code execution and textual reasoning."""

__version__ = "0.1.0"
