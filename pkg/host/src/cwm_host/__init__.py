"""Out-of-process execution host for untrusted world-model source text."""
