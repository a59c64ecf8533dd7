"""Domain models: topology, pressure laws, scenarios and field states."""
