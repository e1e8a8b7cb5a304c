"""makes pytest work."""
