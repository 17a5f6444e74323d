"""opfkit: OPF dataset generation, embedded solvers, and benchmarking."""

__version__ = "0.1.0"
