"""A small timing campaign and its summary table.

Each cell shows the mean time of the successful runs with the success
count in parentheses. A starred cell means no run met the tolerance
within the time limit.
"""
from nmfdescent import Algorithm, Campaign, run_campaign
from nmfdescent.bench import format_table

c = Campaign(sizes=[(30, 20, 2)], epsilons=[1e-2, 1e-3], n_matrices=5,
             algorithms=[Algorithm.RRI, Algorithm.MULT, Algorithm.CLINE, Algorithm.ALS],
             time_limit_s=5.0)
print(format_table(run_campaign(c), c.time_limit_s))
