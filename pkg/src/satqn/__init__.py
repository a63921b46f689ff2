"""Entanglement routing for satellite-aerial-terrestrial quantum networks."""
