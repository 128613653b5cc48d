from .collapse import ScalingCollapse, collapse_score, optimize_collapse, optimize_shift_collapse
from .histogram import Histogram, integer_log_edges, linear_histogram, log_binned_histogram, log_edges
from .io import (fit_record, histogram_from_csv, histogram_to_csv, read_table, table_to_csv,
                 csv_to_table, write_table)
from .percolation import (PercolationCurve, ThetaFit, average_curve, fit_theta, giant_fraction_at,
                          links_at_density, percolation_threshold)
from .powerlaw import LineFit, PowerLawFit, default_fit_range, fit_line, fit_loglog, fit_power_law
from .wealth import (ConditionalMeanFit, LambdaWealthCurve, TheoreticalDensity, conditional_means,
                     degree_bins, propensity_density, lambda_wealth_curve)
