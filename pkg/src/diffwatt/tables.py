"""Published A100 energy measurements, embedded as fixtures.

Values are total joules for 100-prompt sweeps, exactly as printed
(3 significant figures).  Full-precision models carry one 4-tuple per
(resolution, steps) cell in the column order

    (fp16 no-CFG, fp16 CFG, fp32 no-CFG, fp32 CFG)

and qwen, measured in fp16 only, a 2-tuple (fp16 no-CFG, fp16 CFG).
"""

FULL_COLUMNS = (("fp16", False), ("fp16", True), ("fp32", False), ("fp32", True))
FP16_COLUMNS = (("fp16", False), ("fp16", True))

A100_ENERGY_J = {
    "flux": {
        256: {
            10: (2.95e4, 5.81e4, 2.13e5, 4.21e5),
            20: (5.53e4, 1.11e5, 4.17e5, 8.13e5),
            30: (8.06e4, 1.61e5, 6.19e5, 1.23e6),
            40: (1.08e5, 2.14e5, 8.15e5, 1.61e6),
            50: (1.34e5, 2.66e5, 1.02e6, 2.02e6),
        },
        512: {
            10: (5.45e4, 1.06e5, 4.11e5, 8.15e5),
            20: (1.03e5, 2.05e5, 8.09e5, 1.62e6),
            30: (1.54e5, 3.04e5, 1.20e6, 2.38e6),
            40: (2.01e5, 4.06e5, 1.60e6, 3.23e6),
            50: (2.52e5, 5.07e5, 1.99e6, 4.00e6),
        },
        768: {
            10: (9.38e4, 1.87e5, 7.13e5, 1.42e6),
            20: (1.85e5, 3.65e5, 1.42e6, 2.83e6),
            30: (2.75e5, 5.36e5, 2.10e6, 4.27e6),
            40: (3.62e5, 7.18e5, 2.85e6, 5.67e6),
            50: (4.46e5, 9.01e5, 3.52e6, 7.00e6),
        },
        1024: {
            10: (1.61e5, 3.20e5, 1.22e6, 2.42e6),
            20: (3.17e5, 6.22e5, 2.44e6, 4.88e6),
            30: (4.72e5, 9.19e5, 3.71e6, 7.23e6),
            40: (6.25e5, 1.25e6, 4.92e6, 9.75e6),
            50: (7.65e5, 1.54e6, 6.07e6, 1.21e7),
        },
    },
    "sd35": {
        256: {
            10: (1.45e4, 2.49e4, 8.09e4, 1.42e5),
            20: (2.66e4, 4.69e4, 1.56e5, 2.77e5),
            30: (3.97e4, 6.72e4, 2.36e5, 4.08e5),
            40: (5.20e4, 9.04e4, 3.08e5, 5.39e5),
            50: (6.82e4, 1.11e5, 3.82e5, 6.73e5),
        },
        512: {
            10: (2.62e4, 4.60e4, 1.65e5, 3.08e5),
            20: (5.00e4, 8.88e4, 3.21e5, 6.02e5),
            30: (7.29e4, 1.32e5, 4.83e5, 9.11e5),
            40: (9.66e4, 1.77e5, 6.36e5, 1.20e6),
            50: (1.22e5, 2.16e5, 7.92e5, 1.50e6),
        },
        768: {
            10: (4.78e4, 9.02e4, 3.33e5, 6.02e5),
            20: (9.21e4, 1.73e5, 6.52e5, 1.21e6),
            30: (1.39e5, 2.57e5, 9.73e5, 1.81e6),
            40: (1.80e5, 3.47e5, 1.28e6, 2.38e6),
            50: (2.28e5, 4.26e5, 1.63e6, 2.97e6),
        },
        1024: {
            10: (8.16e4, 1.56e5, 5.89e5, 1.08e6),
            20: (1.57e5, 3.12e5, 1.16e6, 2.17e6),
            30: (2.32e5, 4.56e5, 1.74e6, 3.24e6),
            40: (3.09e5, 6.08e5, 2.32e6, 4.30e6),
            50: (3.87e5, 7.53e5, 2.94e6, 5.33e6),
        },
    },
    "sd2": {
        256: {
            10: (3.20e3, 3.81e3, 5.84e3, 8.18e3),
            20: (5.80e3, 7.26e3, 1.05e4, 1.48e4),
            30: (8.40e3, 1.08e4, 1.61e4, 2.22e4),
            40: (1.11e4, 1.39e4, 2.05e4, 2.94e4),
            50: (1.44e4, 1.69e4, 2.70e4, 3.71e4),
        },
        512: {
            10: (5.50e3, 7.88e3, 1.45e4, 2.31e4),
            20: (1.00e4, 1.44e4, 2.72e4, 4.51e4),
            30: (1.47e4, 2.08e4, 3.97e4, 6.58e4),
            40: (1.94e4, 2.79e4, 5.32e4, 8.86e4),
            50: (2.31e4, 3.50e4, 6.61e4, 1.09e5),
        },
        768: {
            10: (1.07e4, 1.55e4, 3.46e4, 6.02e4),
            20: (1.90e4, 2.86e4, 6.69e4, 1.17e5),
            30: (2.69e4, 4.20e4, 9.97e4, 1.74e5),
            40: (3.56e4, 5.50e4, 1.30e5, 2.32e5),
            50: (4.36e4, 6.85e4, 1.64e5, 2.85e5),
        },
        1024: {
            10: (1.99e4, 3.07e4, 7.20e4, 1.35e5),
            20: (3.38e4, 5.53e4, 1.38e5, 2.56e5),
            30: (4.71e4, 8.00e4, 2.00e5, 3.80e5),
            40: (6.19e4, 1.04e5, 2.64e5, 4.99e5),
            50: (7.61e4, 1.31e5, 3.26e5, 6.26e5),
        },
    },
    "qwen": {
        256: {
            10: (1.83e4, 3.67e4),
            20: (3.76e4, 6.96e4),
            30: (5.25e4, 1.11e5),
            40: (7.26e4, 1.43e5),
            50: (8.99e4, 1.75e5),
        },
        512: {
            10: (4.24e4, 7.97e4),
            20: (8.05e4, 1.56e5),
            30: (1.20e5, 2.48e5),
            40: (1.66e5, 3.27e5),
            50: (2.01e5, 4.04e5),
        },
        768: {
            10: (7.48e4, 1.43e5),
            20: (1.46e5, 2.98e5),
            30: (2.28e5, 4.32e5),
            40: (2.88e5, 5.72e5),
            50: (3.53e5, 7.08e5),
        },
        1024: {
            10: (1.36e5, 2.73e5),
            20: (2.72e5, 5.25e5),
            30: (3.98e5, 8.02e5),
            40: (5.36e5, 1.02e6),
            50: (6.63e5, 1.29e6),
        },
    },
}
