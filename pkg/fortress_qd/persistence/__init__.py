"""
File formats for genotypes, archive snapshots, rollout logs and tables.
"""
