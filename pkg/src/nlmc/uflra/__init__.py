"""Self-contained exact-arithmetic QF_UFLRA solver.

Runs as a child process speaking SMT-LIB2 over stdin/stdout
(``python -m nlmc.uflra.server``); the checker drives it through
``nlmc.backend`` exactly like any external solver.
"""
