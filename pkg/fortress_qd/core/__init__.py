"""
FSM genotypes, the fortress simulator, the MAP-Elites archive and search.
"""
