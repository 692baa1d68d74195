"""HTTP interface over one live world."""
