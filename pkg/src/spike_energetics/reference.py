"""Published per-cell reference values used by the CLI defaults and ``verify``."""

# default step current per cell, uA/cm^2
TABLE3_STIMULUS = {1: 1.4, 2: 0.7, 3: 0.15, 4: 1.75, 5: 0.8, 6: 0.25, 7: 0.25, 8: 2.25, 9: 0.44, 10: 0.20}

# metric -> values for cells 1..10
TABLE3 = {
    "mean_frequency": (5, 5, 6, 54, 2, 2, 15, 7, 15, 9),
    "Q_Na": (174, 207, 134, 162, 217, 132, 103, 147, 69, 163),
    "Q_K": (141, 214, 150, 156, 197, 137, 117, 133, 79, 127),
    "Q_min": (65, 108, 70, 22, 129, 37, 15, 51, 55, 125),
    "Q_overlap": (109, 99, 64, 140, 88, 95, 88, 96, 14, 38),
    "charge_separation": (0.38, 0.52, 0.52, 0.14, 0.60, 0.28, 0.14, 0.35, 0.79, 0.77),
    "atp": (0.60, 0.72, 0.46, 0.56, 0.75, 0.46, 0.36, 0.51, 0.24, 0.56),
    "metabolic_energy": (30, 36, 23, 28, 38, 23, 18, 25, 12, 28),
    "ionic_energy": (30, 34, 20, 24, 38, 23, 18, 30, 12, 23),
    "hydrolysis": (49.14, 47.03, 43.93, 41.96, 51.15, 49.70, 51.91, 59.95, 48.78, 40.82),
}


def table3(cell_id: int) -> dict[str, float]:
    return {key: float(vals[cell_id - 1]) for key, vals in TABLE3.items()}


# ionic energy per spike at 36 degC and 7 uA/cm^2
ENERGY_AT_36C_7UA = {9: 8.42, 5: 26.8, 2: 28.5}
