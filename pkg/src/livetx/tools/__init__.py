"""Workflow tools layered on the engine: script import, test runner,
benchmarks, demos, the REPL and the command line entry point."""
