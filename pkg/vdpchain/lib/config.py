from __future__ import absolute_import

from django.conf import settings
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional

import copy
import logging
import ujson

from vdpchain.exceptions import ConfigError
from vdpchain.lib.validator import Validator

logger = logging.getLogger('vdpchain')

def parse_fraction(val, var_name='value'):
    # type: (Any, str) -> Fraction
    """Accepts "p/q", decimal strings, ints, floats and Fractions.

    Floats go through their shortest repr, so 0.7 becomes 7/10 rather
    than the binary expansion."""
    if isinstance(val, Fraction):
        return val
    if isinstance(val, bool):
        raise ConfigError('%s is not a rational' % (var_name,))
    try:
        if isinstance(val, int):
            return Fraction(val)
        if isinstance(val, float):
            return Fraction(repr(val))
        if isinstance(val, str):
            return Fraction(val.replace(' ', ''))
    except (ValueError, ZeroDivisionError):
        pass
    raise ConfigError('%s is not a rational: %r' % (var_name, val))

def format_fraction(val):
    # type: (Fraction) -> str
    if val.denominator == 1:
        return str(val.numerator)
    return '%d/%d' % (val.numerator, val.denominator)

def get_setting(name):
    # type: (str) -> Any
    return getattr(settings, name)

def load_json_config(path):
    # type: (str) -> Dict[str, Any]
    try:
        with open(path) as f:
            data = ujson.load(f)
    except IOError as e:
        raise ConfigError('cannot read %s: %s' % (path, e.strerror or e))
    except ValueError as e:
        raise ConfigError('%s is not valid JSON: %s' % (path, e))
    if not isinstance(data, dict):
        raise ConfigError('%s must contain a JSON object' % (path,))
    return data

def parse_override_value(raw):
    # type: (str) -> Any
    try:
        return ujson.loads(raw)
    except ValueError:
        return raw

def apply_overrides(config, overrides):
    # type: (Dict[str, Any], Iterable[str]) -> Dict[str, Any]
    """
    Applies `a.b.0.c=value` overrides to a copy of `config`.  Path
    components that index into a list must be integers; missing dict
    levels are created.  Values are parsed as JSON when they parse and
    kept as raw strings otherwise, so `gamma=1/20` and `mode=fast` both
    work without quoting.
    """
    result = copy.deepcopy(config)
    for override in overrides:
        if '=' not in override:
            raise ConfigError('override %r is not of the form key=value' % (override,))
        path, raw = override.split('=', 1)
        keys = [k for k in path.strip().split('.') if k != '']
        if not keys:
            raise ConfigError('override %r has an empty key' % (override,))
        value = parse_override_value(raw)

        node = result  # type: Any
        for i, key in enumerate(keys):
            last = (i == len(keys) - 1)
            if isinstance(node, list):
                try:
                    index = int(key)
                    node[index]
                except (ValueError, IndexError):
                    raise ConfigError('override %r: %r is not a valid index' % (override, key))
                if last:
                    node[index] = value
                else:
                    node = node[index]
            elif isinstance(node, dict):
                if last:
                    node[key] = value
                else:
                    if key not in node or not isinstance(node[key], (dict, list)):
                        node[key] = {}
                    node = node[key]
            else:
                raise ConfigError('override %r descends into a scalar' % (override,))
        logger.debug('config override %s = %r', path, value)
    return result

def validate_config(config, validator, var_name='config'):
    # type: (Any, Validator, str) -> None
    error = validator(var_name, config)
    if error:
        raise ConfigError(error)

def load_config(path=None, overrides=(), defaults=None):
    # type: (Optional[str], Iterable[str], Optional[Dict[str, Any]]) -> Dict[str, Any]
    """Loads an experiment config: defaults, then the file, then overrides."""
    config = dict(defaults or {})  # type: Dict[str, Any]
    if path is not None:
        config.update(load_json_config(path))
    return apply_overrides(config, list(overrides))

def dump_json(data):
    # type: (Any) -> str
    """The one serializer for every artifact; sorted keys keep output
    files byte-identical across runs."""
    return ujson.dumps(data, sort_keys=True, indent=2, escape_forward_slashes=False)
