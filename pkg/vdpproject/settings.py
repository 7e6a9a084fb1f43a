from __future__ import absolute_import
# Django settings for the vdpchain workbench.
########################################################################
# Here's how settings for the workbench work:
#
# * settings.py contains the defaults for every tunable of the
# cryptographic core, the chain protocol and the simulator.
# * settings.py imports local_settings.py, and any site-specific
# overrides (a different modulus, bigger keys) belong there.
# * test_settings.py imports this file and shrinks the expensive
# defaults for the test suite.
########################################################################
import os

DEPLOY_ROOT = os.path.join(os.path.realpath(os.path.dirname(__file__)), '..')

try:
    from .local_settings import *  # noqa
except ImportError:
    pass

# For any settings that are not defined in local_settings.py,
# we want to initialize them to sane default
DEFAULT_SETTINGS = {
    # Hidden-order group.  VDF_MODULUS (an int) pins the modulus; when it
    # is None one is derived deterministically from VDF_MODULUS_SEED.
    'VDF_MODULUS': None,
    'VDF_MODULUS_BITS': 512,
    'VDF_MODULUS_SEED': 'vdpchain-desk-modulus',
    'VDF_SECURITY_PARAM': 128,
    'VDF_HASH_TO_GROUP': 'production',
    'VDF_PROOF_STRATEGY': 'long_division',

    # Puzzle difficulty.  Rationals are written as "p/q" strings.
    'PUZZLE_GAMMA': '1/1048576',
    'PUZZLE_THRESHOLD_HASH': 'sha256',
    'FAST_SIM_GAMMA': '1/20',

    'IDENTITY_KEY_BITS': 1024,

    'CHAIN_KAPPA_CON': 6,
    'CHAIN_STAKE_AMOUNT': 10000,
    'CHAIN_LOCK_DAYS': 28,
    'CHAIN_BLOCKS_PER_DAY': 144,
    'CHAIN_BLOCK_REWARD': 100,
    'CHAIN_EPSILON': '1/100',
    'CHAIN_INITIAL_BALANCE': 100000,

    'SIM_DURATION': 1000,
    'SIM_ROUND_DELTA': 0,
    'SIM_RNG_SEED': 0,
    'SIM_SAMPLE_POINTS': 200,
    'SIM_REAL_MODULUS_BITS': 128,
    'SIM_REAL_SECURITY_PARAM': 32,
    'SIM_SOLVER_COUNT': 64,
    'SIM_QUALITY_WINDOW': 100,
    'SIM_JOBS': 1,

    'LOG_REPEAT_WINDOW': 60,
    'TEST_SUITE': False,
}

for setting_name, setting_val in DEFAULT_SETTINGS.items():
    if setting_name not in vars():
        vars()[setting_name] = setting_val

########################################################################
# STANDARD DJANGO SETTINGS
########################################################################

# The workbench has no web surface and signs nothing with this key.
SECRET_KEY = 'vdpchain-workbench-not-a-secret'
DEBUG = False
ALLOWED_HOSTS = []

TIME_ZONE = 'UTC'
LANGUAGE_CODE = 'en-us'

# The validator messages are marked for translation but no catalogs
# ship; keeping i18n off lets the library run before app loading.
USE_I18N = False
USE_TZ = True

INSTALLED_APPS = [
    'vdpchain',
]

# No models; the chain state lives in memory and in JSON artifacts.
DATABASES = {}

TEST_RUNNER = 'vdpchain.lib.test_runner.Runner'

FIXTURES_DIR = os.path.join(DEPLOY_ROOT, 'vdpchain', 'fixtures')

########################################################################
# LOGGING SETTINGS
########################################################################

LOG_DIR = os.path.join(DEPLOY_ROOT, 'var', 'log')
FILE_LOG_PATH = os.path.join(LOG_DIR, 'vdpchain.log')
ERROR_FILE_LOG_PATH = os.path.join(LOG_DIR, 'errors.log')

if not os.path.exists(LOG_DIR):
    os.makedirs(LOG_DIR)

LOGGING = {
    'version': 1,
    'disable_existing_loggers': True,
    'formatters': {
        'default': {
            'format': '%(asctime)s %(levelname)-8s %(message)s'
        }
    },
    'filters': {
        'RepeatLimiter': {
            '()': 'vdpchain.lib.logging_util.RepeatLimiter',
        },
        'require_not_test_suite': {
            '()': 'vdpchain.lib.logging_util.RequireNotTestSuite',
        },
    },
    'handlers': {
        'console': {
            'level':     'DEBUG',
            'class':     'logging.StreamHandler',
            'formatter': 'default',
            'filters':   ['require_not_test_suite'],
        },
        'file': {
            'level':       'DEBUG',
            'class':       'logging.handlers.TimedRotatingFileHandler',
            'formatter':   'default',
            'filename':    FILE_LOG_PATH,
            'when':        'D',
            'interval':    7,
            'backupCount': 100,
            'delay':       True,
        },
        'errors_file': {
            'level':       'WARNING',
            'class':       'logging.handlers.TimedRotatingFileHandler',
            'formatter':   'default',
            'filename':    ERROR_FILE_LOG_PATH,
            'when':        'D',
            'interval':    7,
            'backupCount': 100,
            'delay':       True,
        },
    },
    'loggers': {
        '': {
            'handlers': ['console'],
            'level':    'INFO',
            'propagate': False,
        },
        'django': {
            'handlers': ['console', 'errors_file'],
            'level':    'INFO',
            'propagate': False,
        },
        'vdpchain': {
            'handlers': ['console', 'file', 'errors_file'],
            'level':    'INFO',
            'propagate': False,
        },
        'vdpchain.sim': {
            'handlers': ['console', 'file', 'errors_file'],
            'level':    'INFO',
            'filters':  ['RepeatLimiter'],
            'propagate': False,
        },
        'vdpchain.management': {
            'handlers': ['file', 'errors_file'],
            'level':    'INFO',
            'propagate': False,
        },
    }
}
