"""HTTP API for the human-in-the-loop review workflow."""
