"""Benchmarks, ensemble driver, error metrics and command line."""
