# Configure Django for pytest the same way tools/test-backend does.
import os

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'vdpproject.test_settings')

import django

django.setup()
