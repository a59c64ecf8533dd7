"""Pointwise numerics: Riemann invariants, nudging terms and node solves."""
