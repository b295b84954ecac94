"""Walk through ingesting a chat export and cutting it into sessions.

Run from the repository root:  python3 demos/01_parse_and_sessionize.py
"""
# %%
import io

import numpy as np

from chatwork.ingest import FormatConfig, anonymize, parse_export
from chatwork.sessionizer import build_group_sessions, build_user_sessions, peak_concurrency

# A tiny export in the usual "date, time - speaker: text" layout.  The first
# line is a system notice and the third one wraps onto a second line.
export = """\
10/10/2017, 09:00 - Messages and calls are end-to-end encrypted.
10/10/2017, 09:01 - Ana: bom dia
10/10/2017, 09:03 - Bia: bom dia! alguem viu
a noticia de hoje?
10/10/2017, 09:10 - Ana: https://example.org/noticia
10/10/2017, 09:26 - Ana: <Media omitted>
10/10/2017, 11:00 - Caio: \U0001F602
10/10/2017, 11:02 - Bia: kkkk
"""

# Times in this file are Brasilia time (UTC-3).
fmt = FormatConfig(tz_offset_min=-180)
log, report = parse_export(io.StringIO(export), fmt, group_id="demo")
print(f"{len(log)} messages, {report.system_lines} system line(s), skipped: {report.skipped}")
for m in log:
    print(f"  t={m.timestamp}  {m.user_id:5s} {','.join(m.content.names()):10s} len={m.text_len}")

# %%
# Identities are replaced by keyed hashes before anything is stored.
anon = anonymize(log, b"demo-key")
print("pseudonyms:", sorted(anon.senders))

# %%
# User sessions: a user's run of messages with no gap above 15 minutes.
# Ana's 09:10 -> 09:26 gap is 16 minutes, so it opens a new session.
for s in build_user_sessions(log, 15):
    print(f"user {s.user_id:5s} [{s.start}, {s.end}] {s.msg_count} msg")

# Group sessions use the pooled stream and a longer threshold.
gs = build_group_sessions(log, 81)
for s, peak in zip(gs, peak_concurrency(build_user_sessions(log, 15), gs)):
    print(f"group session {s.duration:3d} min, users {dict(s.per_user_counts)}, peak concurrency {peak}")

print("IAT of the pooled stream:", np.diff(log.timestamps).tolist())
