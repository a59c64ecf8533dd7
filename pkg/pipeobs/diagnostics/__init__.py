"""Energy diagnostics, antiderivative tracking, decay fits and assumption audits."""
