from __future__ import absolute_import

import logging
from datetime import datetime, timedelta
from typing import Dict

# Adapted http://djangosnippets.org/snippets/2242/ by user s29 (October 25, 2010)

class _RateLimitFilter(object):
    """Drops a record whose message template was already emitted within
    the last LOG_REPEAT_WINDOW seconds.  The simulator logs per-event
    conditions (a solver bound binding, a stale solve) from inside its
    event loop; this keeps one line per condition per window."""

    def __init__(self):
        # type: () -> None
        self.last_seen = {}  # type: Dict[str, datetime]

    def filter(self, record):
        # type: (logging.LogRecord) -> bool
        from django.conf import settings

        rate = getattr(settings, 'LOG_REPEAT_WINDOW', 60)  # seconds
        if rate <= 0 or record.levelno >= logging.ERROR:
            return True

        key = '%s:%s' % (record.name, record.msg)
        now = datetime.now()
        last = self.last_seen.get(key, datetime.min)
        duplicate = last >= now - timedelta(seconds=rate)
        if not duplicate:
            self.last_seen[key] = now
        return not duplicate

class RepeatLimiter(_RateLimitFilter):
    pass

class RequireNotTestSuite(logging.Filter):
    def filter(self, record):
        # type: (logging.LogRecord) -> bool
        from django.conf import settings
        return not settings.TEST_SUITE
