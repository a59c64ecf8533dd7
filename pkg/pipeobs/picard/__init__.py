"""Fixed-point iteration along characteristics and its smallness budgets."""
