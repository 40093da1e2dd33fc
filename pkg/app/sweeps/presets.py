"""
Named run configurations for the reference operating points
"""

import copy
from typing import Any, Dict, List

# Tungsten tip used in the experiment
TIP_RADIUS_NM = 80.0
TIP_GEOMETRY_K = 5.0

PRESETS: Dict[str, Dict[str, Any]] = {
    # Single sub-cycle electron pulse from a three-cycle pulse
    'subcycle_pulse': {
        'description': 'Three-cycle pulse at CE phase pi, flux recorded 2 nm outside the surface',
        'laser': {
            'f_laser_GVm': 2.7,
            'f_dc_GVm': 0.2,
            'tau_fs': 8.0,
            'phi_rad': 3.141592653589793,
            'polarity': -1,        # DC field quoted along the emission direction
        },
        'grid': {
            'z_detector_nm': 2.0,
        },
        'sweep': {
            'task': 'yield',
            'axes': [],
        },
    },

    # Peak-to-baseline ratio against DC field from the closed-form model
    'ratio_vs_dc': {
        'description': 'Closed-form peak-to-baseline ratio at F_laser = 1.8 GV/m with an effective B',
        'laser': {
            'f_laser_GVm': 1.8,
            'f_dc_GVm': 0.53,
            'tau_fs': 8.0,
        },
        'fn': {
            'b_GVm': 14.8,
            'schottky_correction': False,
            'tip_radius_nm': TIP_RADIUS_NM,
        },
        'sweep': {
            'task': 'peak_to_baseline',
            'model': 'analytic',
            'axes': [
                {'name': 'f_dc_GVm', 'min': 0.2, 'max': 1.5, 'count': 14, 'spacing': 'linear'},
            ],
        },
    },

    # TDSE peak-to-baseline prediction from the fluence nonlinearity
    'ratio_vs_dc_tdse': {
        'description': 'Exponent-route and direct-route peak-to-baseline ratios from the TDSE',
        'laser': {
            'f_laser_GVm': 1.8,
            'tau_fs': 8.0,
        },
        'sweep': {
            'task': 'peak_to_baseline',
            'model': 'tdse',
            'axes': [
                {'name': 'f_dc_GVm', 'min': 0.2, 'max': 1.5, 'count': 6, 'spacing': 'linear'},
            ],
        },
    },

    # CE-phase modulation depth, two-cycle pulse (small default grid)
    'modulation_2cycle': {
        'description': 'Modulation depth over (F_DC, fluence) for tau = 5.3 fs',
        'laser': {
            'fluence_Jm2': 10.0,
            'tau_fs': 5.3,
        },
        'sweep': {
            'task': 'modulation_scan',
            'n_phases': 16,
            'axes': [
                {'name': 'f_dc_GVm', 'min': 0.1, 'max': 1.0, 'count': 6, 'spacing': 'linear'},
                {'name': 'fluence_Jm2', 'min': 5.0, 'max': 60.0, 'count': 6, 'spacing': 'log'},
            ],
        },
    },

    # Same grid for a three-cycle pulse
    'modulation_3cycle': {
        'description': 'Modulation depth over (F_DC, fluence) for tau = 8 fs',
        'laser': {
            'fluence_Jm2': 10.0,
            'tau_fs': 8.0,
        },
        'sweep': {
            'task': 'modulation_scan',
            'n_phases': 16,
            'axes': [
                {'name': 'f_dc_GVm', 'min': 0.1, 'max': 1.0, 'count': 6, 'spacing': 'linear'},
                {'name': 'fluence_Jm2', 'min': 5.0, 'max': 60.0, 'count': 6, 'spacing': 'log'},
            ],
        },
    },

    # Pulse-duration trend at fixed fluence
    'modulation_duration': {
        'description': 'Modulation depth against pulse duration (2, 2.5 and 3 cycles)',
        'laser': {
            'fluence_Jm2': 10.0,
            'f_dc_GVm': 0.2,
        },
        'sweep': {
            'task': 'modulation_scan',
            'n_phases': 16,
            'axes': [
                {'name': 'tau_fs', 'min': 5.3, 'max': 8.0, 'count': 3, 'spacing': 'linear'},
            ],
        },
    },

    # Dense grid; hours of compute on a workstation
    'modulation_dense': {
        'description': 'Dense (F_DC, fluence, tau) modulation-depth grid',
        'laser': {
            'fluence_Jm2': 10.0,
        },
        'sweep': {
            'task': 'modulation_scan',
            'n_phases': 32,
            'axes': [
                {'name': 'f_dc_GVm', 'min': 0.05, 'max': 1.5, 'count': 16, 'spacing': 'linear'},
                {'name': 'fluence_Jm2', 'min': 2.0, 'max': 80.0, 'count': 16, 'spacing': 'log'},
                {'name': 'tau_fs', 'min': 5.3, 'max': 8.0, 'count': 3, 'spacing': 'linear'},
            ],
        },
    },

    # Time-independent comparison for the three-cycle grid
    'quasi_static_3cycle': {
        'description': 'Instantaneous Fowler-Nordheim modulation depth over the three-cycle grid',
        'laser': {
            'fluence_Jm2': 10.0,
            'tau_fs': 8.0,
        },
        'sweep': {
            'task': 'quasi_static_modulation',
            'n_phases': 16,
            'axes': [
                {'name': 'f_dc_GVm', 'min': 0.1, 'max': 1.0, 'count': 6, 'spacing': 'linear'},
                {'name': 'fluence_Jm2', 'min': 5.0, 'max': 60.0, 'count': 6, 'spacing': 'log'},
            ],
        },
    },

    # Interferometric autocorrelation with the instantaneous-current surrogate
    'iac_surrogate': {
        'description': 'Surrogate autocorrelation traces for three DC fields',
        'laser': {
            'f_laser_GVm': 1.8,
            'tau_fs': 8.0,
        },
        'fn': {
            'b_GVm': 14.8,
            'schottky_correction': False,
        },
        'iac': {
            'model': 'surrogate',
            'detector': 'fn',
        },
        'sweep': {
            'task': 'iac',
            'axes': [
                {'name': 'f_dc_GVm', 'min': 0.3, 'max': 1.2, 'count': 3, 'spacing': 'linear'},
            ],
        },
    },
}


def get_preset(name: str) -> Dict[str, Any]:
    """Deep copy of a named preset; empty dict for unknown names"""
    return copy.deepcopy(PRESETS.get(name, {}))


def list_presets() -> List[str]:
    return sorted(PRESETS)


def merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Recursive dict merge; values in ``overrides`` win, lists are replaced"""
    out = copy.deepcopy(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out
