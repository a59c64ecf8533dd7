"""Time steppers for the truth and observer systems."""
