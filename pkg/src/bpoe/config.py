"""Runtime configuration knobs."""

#: Upper cap on worker threads for parallel-capable routines.  ``None`` means
#: no cap.  The current implementations are vectorized single-threaded, so
#: the cap is honored vacuously; it exists so callers and the CLI have a
#: stable place to set it.
max_threads: int | None = None
