"""English messages for the run summary"""

MESSAGES = {
    'record_pass': "  ✅ {name} [{anchor}] {values}",
    'record_fail': "  ❌ {name} [{anchor}] {values}",
    'record_error': "  💥 {name} [{anchor}] {error}",
    'summary_pass': "🎉 {passed}/{total} checks passed",
    'summary_fail': "⚠️ {failed} of {total} checks failed: {names}",
    'report_written': "📄 Report written to {path}",
    'report_error': "❌ Cannot write the report to {path}: {error}",
    'run_stored': "💾 Stored as run {run_id}",
    'config_error': "❌ Invalid configuration: {error}",
    'config_dump': "⚙️ Effective configuration:\n{text}",
}


def get_message(key: str, **kwargs) -> str:
    """Get message with formatting"""
    message = MESSAGES.get(key, f"❌ Message not found: {key}")
    if kwargs:
        try:
            return message.format(**kwargs)
        except (KeyError, ValueError):
            return message
    return message


def format_values(values: dict, limit: int = 4) -> str:
    """First few key=value pairs of a record"""
    from abnorm.utils.helpers import format_value

    items = list(values.items())
    text = ', '.join(f"{key}={format_value(value)}" for key, value in items[:limit])
    if len(items) > limit:
        text += ', ...'
    return text
