# celery_config.py
import logging

from celery import Celery

logger = logging.getLogger(__name__)

# keys of app.config handed to Celery (lower-cased, without the CELERY_ prefix)
_CELERY_KEYS = {
    'CELERY_TASK_SERIALIZER': 'task_serializer',
    'CELERY_ACCEPT_CONTENT': 'accept_content',
    'CELERY_RESULT_SERIALIZER': 'result_serializer',
    'CELERY_TIMEZONE': 'timezone',
    'CELERY_TASK_RESULT_EXPIRES': 'result_expires',
}


def make_celery(app):
    """Celery bound to the Flask app: tasks run inside its application context."""
    celery = Celery(
        app.import_name,
        backend=app.config['CELERY_RESULT_BACKEND'],
        broker=app.config['CELERY_BROKER_URL'],
        include=['tasks'],
    )
    celery.conf.update({new: app.config[old] for old, new in _CELERY_KEYS.items()
                        if old in app.config})

    class ContextTask(celery.Task):
        def __call__(self, *args, **kwargs):
            with app.app_context():
                return self.run(*args, **kwargs)

    celery.Task = ContextTask
    logger.debug("Celery configured with broker %s", app.config['CELERY_BROKER_URL'])
    return celery
