"""
Command-line front end of the cyclicity lab.

Every command writes result.csv, summary.json and manifest.json into the output
directory; failures write error.json and exit with 2 (validation) or 3 (numerics).
A finished run whose summary carries a blocking flag keeps its artifacts and
also exits with 3.
"""
import argparse
import hashlib
import json
import logging
import os
import platform
import sys
import time

import numpy as np
import pandas as pd
import scipy

from . import ball_geometry, boundary_sets, capacity, constructions, cyclicity
from .config import Config
from .exceptions import NumericalInstabilityError, ValidationError
from .series_core import PowerSeries
from .tools.misc import make_rng

logger = logging.getLogger('LabCLI')

COMMANDS = (
    'cantor-build', 'measure-profile', 'kset-check', 'capacity-sweep', 'critical-alpha',
    'construct-psi', 'construct-outer', 'bump', 'chain-verify', 'chain-crosscheck',
    'dilation-sweep', 'approximant', 'layercake', 'full-report',
)

# named battery functions for the series commands
FUNCTIONS = {
    'one-minus-z1': {(0, 0): 1.0, (1, 0): -1.0},
    'one-minus-z1-squared': {(0, 0): 1.0, (1, 0): -2.0, (2, 0): 1.0},
    'one-minus-product': {(0, 0): 1.0, (1, 1): -2.0},
    'z1': {(1, 0): 1.0},
    'shifted': {(0, 0): 2.0, (1, 0): -1.0},
}

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

# report flags that turn a finished run into a numerical failure
BLOCKING_FLAGS = ('truncation-unstable', 'quadrature-nonconvergence')

SURROGATES = {
    'H': 'closed form 1 - exp(-2is) z1^2 - z2^2',
    'psi': 'greedy 2^-k covers, psi = sum 2^-k / (2^-k + H), f = exp(-beta psi)',
    'outer': 'one-variable outer function with modulus max(dist(., E), floor)',
}


def _parse_assignment(text: str):
    if '=' not in text:
        raise ValidationError(f"expected key=value, got '{text}'")
    key, raw = text.split('=', 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def build_config(args) -> Config:
    """Defaults < JSON config file < --seed / --resolution / --set."""
    data = Config().to_dict()
    if args.config:
        data.update(Config.load(args.config).to_dict())
    for item in args.set or []:
        key, value = _parse_assignment(item)
        data[key] = value
    if args.seed is not None:
        data['seed'] = args.seed
    if args.resolution is not None:
        data['series_degree'] = args.resolution
    return Config.from_dict(data)


def _params(args) -> dict:
    params = {}
    if args.params:
        try:
            params.update(json.loads(args.params))
        except json.JSONDecodeError as err:
            raise ValidationError(f"--params is not valid JSON: {err}") from err
    for item in args.param or []:
        key, value = _parse_assignment(item)
        params[key] = value
    return params


def _number(params: dict, key: str, default, kind=float):
    """Numeric command parameter; malformed values are validation errors."""
    value = params.get(key, default)
    if value is None:
        return None
    if isinstance(value, (bool, list, dict)):
        raise ValidationError(f"parameter '{key}' must be a number, got {value!r}")
    try:
        number = float(value)
    except (TypeError, ValueError) as err:
        raise ValidationError(f"parameter '{key}' must be a number, got {value!r}") from err
    if not np.isfinite(number):
        raise ValidationError(f"parameter '{key}' must be finite, got {value!r}")
    if kind is int:
        if not number.is_integer():
            raise ValidationError(f"parameter '{key}' must be an integer, got {value!r}")
        return int(number)
    return number


def _numbers(params: dict, key: str, default, kind=float) -> list:
    values = params.get(key, default)
    if not isinstance(values, (list, tuple)):
        values = [values]
    if not values:
        raise ValidationError(f"parameter '{key}' must not be empty")
    return [_number({key: v}, key, None, kind) for v in values]


def _jsonable(value):
    if hasattr(value, '_asdict'):
        return {k: _jsonable(v) for k, v in value._asdict().items()}
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if np.isfinite(value) else str(value)
    if isinstance(value, (np.complexfloating, complex)):
        return {'re': float(value.real), 'im': float(value.imag)}
    return value


def _cantor_spec(config: Config, params: dict) -> boundary_sets.CantorSpec:
    depth = _number(params, 'depth', config.cantor_depth, int)
    if 'preset' in params:
        return boundary_sets.cantor_preset(params['preset'], depth, config)
    return boundary_sets.CantorSpec(config.dissection_ratio, depth, (config.base_lo, config.base_hi))


def _series(config: Config, params: dict) -> PowerSeries:
    name = params.get('function', 'one-minus-z1')
    if name == 'psi-exp':
        E = boundary_sets.cantor_build(_cantor_spec(config, params))
        return constructions.psi_exp_series(E, config.series_degree, _number(params, 'beta', config.psi_beta),
                                            _number(params, 'k_max', config.psi_k_max, int), config=config)
    if name not in FUNCTIONS:
        raise ValidationError(f"unknown function '{name}', expected 'psi-exp' or one of {sorted(FUNCTIONS)}")
    return PowerSeries.from_terms(FUNCTIONS[name], config.series_degree)


def _profile_slope(spec, config: Config):
    intervals = boundary_sets.cantor_build(spec)
    grid = spec.profile_grid(config.profile_top_level, config.profile_points)
    return boundary_sets.measure_profile(intervals, grid, config)


def cmd_cantor_build(config, params):
    spec = _cantor_spec(config, params)
    E = boundary_sets.cantor_build(spec)
    frame = pd.DataFrame({'lo': E.lows, 'hi': E.highs})
    summary = {
        'lambda': spec.lam,
        'depth': spec.depth,
        'count': E.count,
        'measure': E.measure,
        'dimension': spec.dimension,
        'porosity': boundary_sets.porosity_constant(E, min(config.kset_max_level, spec.depth), config),
    }
    return frame, summary


def cmd_measure_profile(config, params):
    spec = _cantor_spec(config, params)
    profile, fit = _profile_slope(spec, config)
    frame = pd.DataFrame({'t': profile.t, 'measure': profile.values})
    return frame, {'fit': fit, 'd_estimate': 1.0 - fit.exponent, 'dimension': spec.dimension}


def cmd_kset_check(config, params):
    kind = params.get('set', 'cantor')
    if kind == 'cantor':
        E = boundary_sets.cantor_build(_cantor_spec(config, params))
    elif kind == 'fat':
        E = boundary_sets.fat_cantor_build((config.base_lo, config.base_hi),
                                           _number(params, 'depth', config.cantor_depth, int),
                                           _number(params, 'decay', 0.5))
    else:
        raise ValidationError(f"unknown set kind '{kind}', expected 'cantor' or 'fat'")
    report = boundary_sets.kset_check(E, config=config)
    frame = pd.DataFrame([{'set': kind, 'constant': report.constant, 'coarse_constant': report.coarse_constant,
                           'growth': report.growth, 'passed': report.passed}])
    return frame, {'report': report}


def cmd_capacity_sweep(config, params):
    spec = _cantor_spec(config, params)
    case = params.get('case', 'transversal')
    alphas = _numbers(params, 'alphas', [0.5, 1.0, 1.5])
    levels = _numbers(params, 'levels', list(config.capacity_levels), int)
    rows = capacity.energy_growth(spec, case, alphas, levels, config)
    return pd.DataFrame(rows), {'case': case, 'levels': levels, 'alphas': alphas}


def cmd_critical_alpha(config, params):
    spec = _cantor_spec(config, params)
    case = params.get('case', 'transversal')
    if case == 'product':
        result = capacity.critical_alpha_capacity(spec, case, config)
        d = spec.dimension
    else:
        profile, fit = _profile_slope(spec, config)
        result = capacity.critical_alpha_capacity(profile, case, config)
        d = 1.0 - fit.exponent
    frame = pd.DataFrame([{'case': case, 'd': d, 'alpha_c': result.alpha_c,
                           'bracket_lo': result.bracket[0], 'bracket_hi': result.bracket[1]}])
    return frame, {'result': result, 'd': d}


def cmd_construct_psi(config, params):
    spec = _cantor_spec(config, params)
    E = boundary_sets.cantor_build(spec)
    ps = constructions.build_psi_series(E, _number(params, 'k_max', config.psi_k_max, int), config)
    frame = pd.DataFrame({'k': np.arange(1, ps.k_max + 1), 'count': ps.counts})
    radii = 1.0 - 2.0 ** (-np.arange(1, 11, dtype=float))
    zeta = ball_geometry.CurveChart.transversal().map(np.array(float(E.lows[0])))
    f = constructions.f_exp(ps, _number(params, 'beta', config.psi_beta), config)
    values = np.abs(f(radii * zeta[0], radii * zeta[1]))
    summary = {
        'k_max': ps.k_max,
        'tail_constant': constructions.covering_tail_constant(ps),
        'radial_modulus': {'r': radii, 'abs_f': values},
    }
    return frame, summary


def cmd_construct_outer(config, params):
    spec = _cantor_spec(config, params)
    E = boundary_sets.cantor_build(spec)
    weight = constructions.set_distance_weight(E, config=config)
    theta = _number(params, 'theta', float(E.lows[0]))
    radii = 1.0 - 2.0 ** (-np.arange(1, 13, dtype=float))
    values = constructions.outer_surrogate(weight, radii * np.exp(1j * theta), config=config)
    frame = pd.DataFrame({'r': radii, 'abs_outer': np.abs(values)})
    return frame, {'theta': theta, 'boundary_weight': float(weight(np.array([theta]))[0])}


def cmd_bump(config, params):
    spec = _cantor_spec(config, params)
    bump = constructions.bump_sum(boundary_sets.cantor_build(spec), _number(params, 'epsilon', None), config)
    x = np.linspace(0.0, 1.0, _number(params, 'samples', 2001, int))
    report = constructions.holder_witness(bump, _number(params, 'grid', 100_000, int))
    return pd.DataFrame({'x': x, 'f': bump(x)}), {'epsilon': bump.epsilon, 'holder': report}


def cmd_chain_verify(config, params):
    case = params.get('case', 'transversal')
    d = _number(params, 'd', config.dimension)
    alphas = _numbers(params, 'alphas', [_number(params, 'alpha', 1.0)])
    rows = []
    fits = []
    for alpha in alphas:
        report = cyclicity.chain_verify(case, d, alpha, config=config)
        rows.extend({'alpha': alpha, 'u': u, 'value': v} for u, v in zip(report.u_grid, report.values))
        fits.append({'alpha': alpha, 'slope': report.fit.exponent,
                     'predicted': report.predicted_slope, 'flags': report.flags})
    return pd.DataFrame(rows), {'case': case, 'd': d, 'fits': fits}


def cmd_chain_crosscheck(config, params):
    spec = _cantor_spec(config, params)
    case = params.get('case', 'transversal')
    report = cyclicity.chain_crosscheck_4d(case, boundary_sets.cantor_build(spec), _number(params, 'alpha', 1.0),
                                           _numbers(params, 'u_samples', [1e-2, 1e-3, 1e-4]),
                                           control=bool(params.get('control', False)), config=config)
    frame = pd.DataFrame({'u': report.u, 'mc': report.mc_values, 'mc_error': report.mc_errors,
                          'reduced': report.reduced_values, 'ratio': report.ratios})
    return frame, {'case': case, 'alpha': report.alpha, 'band': report.band}


def cmd_dilation_sweep(config, params):
    f = _series(config, params)
    sweep = cyclicity.DilationSweep.from_config(_number(params, 'alpha', 1.0), config)
    report = cyclicity.quotient_norm_sweep(f, sweep, config, strict=bool(params.get('strict', False)))
    multiplier = cyclicity.multiplier_heuristic(f, _number(params, 'k', 1, int), config=config)
    frame = pd.DataFrame({'r': report.r, 'derivative_norm': report.derivative_norms,
                          'quotient_norm': report.quotient_norms})
    return frame, {'function': params.get('function', 'one-minus-z1'), 'slope': report.slope,
                   'truncation_stable': report.truncation_stable, 'nonvanishing_min': report.nonvanishing_min,
                   'multiplier': multiplier, 'flags': report.flags}


def cmd_approximant(config, params):
    f = _series(config, params)
    result = cyclicity.opt_approximant_distance(f, _number(params, 'alpha', 1.0),
                                                _number(params, 'max_degree', 10, int), config)
    frame = pd.DataFrame({'degree': result.degrees, 'distance': result.distances,
                          'condition': result.conditions})
    return frame, {'function': params.get('function', 'one-minus-z1'), 'final_distance': result.distances[-1]}


def cmd_layercake(config, params):
    rng = make_rng(config.seed)
    if 'points' in params:
        points = np.asarray(_numbers(params, 'points', None))
    else:
        points = rng.uniform(0.0, 2.0 * np.pi, size=_number(params, 'n_points', 8, int))
    scale = _number(params, 'scale', 0.1)
    result = cyclicity.layer_cake_check(points, lambda t: np.exp(-np.asarray(t) / scale),
                                        lambda t: -np.exp(-np.asarray(t) / scale) / scale, config)
    frame = pd.DataFrame([{'lhs': result.lhs, 'rhs': result.rhs, 'relative_error': result.relative_error}])
    return frame, {'points': np.sort(np.mod(points, 2.0 * np.pi)), 'scale': scale}


def cmd_full_report(config, params):
    """Set, profile, capacity side and chain side for the three cases."""
    spec = _cantor_spec(config, params)
    rows = []
    for case in params.get('cases', ['transversal', 'ctangential', 'product']):
        logger.info(f"Full report | case: {case}")
        report = cyclicity.estimate_critical_index(spec, case, config)
        rows.append({'case': case, 'd': report.d, 'predicted': report.predicted,
                     'alpha_c_cyclic': report.alpha_c_cyclic, 'alpha_c_capacity': report.alpha_c_capacity,
                     'gap': report.gap})
    return pd.DataFrame(rows), {'lambda': spec.lam, 'depth': spec.depth, 'dimension': spec.dimension}


HANDLERS = {
    'cantor-build': cmd_cantor_build,
    'measure-profile': cmd_measure_profile,
    'kset-check': cmd_kset_check,
    'capacity-sweep': cmd_capacity_sweep,
    'critical-alpha': cmd_critical_alpha,
    'construct-psi': cmd_construct_psi,
    'construct-outer': cmd_construct_outer,
    'bump': cmd_bump,
    'chain-verify': cmd_chain_verify,
    'chain-crosscheck': cmd_chain_crosscheck,
    'dilation-sweep': cmd_dilation_sweep,
    'approximant': cmd_approximant,
    'layercake': cmd_layercake,
    'full-report': cmd_full_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='python -m src.cli',
        description='Cyclicity lab: Cantor sets, Riesz capacity and integral chains on the ball of C^2.',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python -m src.cli cantor-build --param preset=middle-thirds --out runs/cantor
  python -m src.cli chain-verify --param case=ctangential --param alpha=1.6
  python -m src.cli critical-alpha --param case=product --set capacity_centers=24
  python -m src.cli full-report --seed 7 --out runs/report
  python -m src.cli dilation-sweep --param function=psi-exp --param depth=8 --param k_max=10
        """,
    )
    parser.add_argument('command', help=f"one of: {', '.join(COMMANDS)}")
    parser.add_argument('--config', type=str, default=None, help='JSON config file')
    parser.add_argument('--seed', type=int, default=None, help='64-bit seed')
    parser.add_argument('--out', type=str, default=None, help='output directory (default: timestamped)')
    parser.add_argument('--resolution', type=int, default=None, help='power series truncation degree')
    parser.add_argument('--set', action='append', metavar='KEY=VALUE', help='config override')
    parser.add_argument('--param', action='append', metavar='KEY=VALUE', help='command parameter')
    parser.add_argument('--params', type=str, default=None, help='command parameters as a JSON object')
    parser.add_argument('--verbose', action='store_true', help='debug logging')
    return parser


def _versions() -> dict:
    return {
        'python': platform.python_version(),
        'numpy': np.__version__,
        'scipy': scipy.__version__,
        'pandas': pd.__version__,
    }


def _write_json(path: str, payload: dict):
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(_jsonable(payload), handle, indent=2, sort_keys=True)
        handle.write('\n')


def _collect_flags(value):
    """Every string under a 'flags' key, at any depth of the summary."""
    if hasattr(value, '_asdict'):
        value = value._asdict()
    if isinstance(value, dict):
        for key, item in value.items():
            if key == 'flags' and isinstance(item, (list, tuple)):
                yield from (flag for flag in item if isinstance(flag, str))
            else:
                yield from _collect_flags(item)
    elif isinstance(value, (list, tuple)):
        for item in value:
            yield from _collect_flags(item)


def run(args) -> int:
    started = time.perf_counter()
    out_dir = args.out
    paths = None
    try:
        config = build_config(args)
        out_dir = out_dir or config.get_output_dir()
        paths = config.create_output_dirs(out_dir)
        if args.command not in HANDLERS:
            raise ValidationError(f"unknown command '{args.command}', expected one of {COMMANDS}")
        params = _params(args)
        logger.info(f"Command start | {args.command} | out: {out_dir}")
        frame, summary = HANDLERS[args.command](config, params)
    except (ValidationError, NumericalInstabilityError) as err:
        code = EXIT_VALIDATION if isinstance(err, ValidationError) else EXIT_NUMERICAL
        if paths is None:
            paths = Config().create_output_dirs(out_dir or Config().get_output_dir())
        _write_json(paths['error'], {'type': type(err).__name__, 'message': str(err), 'command': args.command})
        logger.error(f"Command failed | {args.command} | {type(err).__name__}: {err}")
        return code

    frame.to_csv(paths['result'], index=False, float_format='%.12g')
    config_text = json.dumps(config.to_dict(), sort_keys=True)
    summary = dict(summary)
    summary['provenance'] = {
        'command': args.command,
        'params': params,
        'seed': config.seed,
        'config_sha256': hashlib.sha256(config_text.encode('utf-8')).hexdigest(),
        'truncation': {'series_degree': config.series_degree, 'psi_k_max': config.psi_k_max,
                       'psi_beta': config.psi_beta},
        'surrogates': SURROGATES,
    }
    _write_json(paths['summary'], summary)
    _write_json(paths['manifest'], {
        'command': args.command,
        'config': config.to_dict(),
        'versions': _versions(),
        'wall_time': time.perf_counter() - started,
    })
    blocking = sorted(set(_collect_flags(summary)) & set(BLOCKING_FLAGS))
    if blocking:
        message = f"run finished with numerical flags: {', '.join(blocking)}"
        _write_json(paths['error'], {'type': NumericalInstabilityError.__name__, 'message': message,
                                     'command': args.command})
        logger.error(f"Command flagged | {args.command} | {message}")
        return EXIT_NUMERICAL
    logger.info(f"Command done | {args.command} | rows: {len(frame)} | {os.path.abspath(out_dir)}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(asctime)s %(name)s %(levelname)s %(message)s')
    return run(args)


if __name__ == '__main__':
    sys.exit(main())
