#!/usr/bin/env python3
# Stand-in corrector hook for tests. Behaviour is picked by argv[1].
import json
import os
import sys
import time

mode = sys.argv[1] if len(sys.argv) > 1 else "echo"
req = json.load(sys.stdin)
text = req["voted_text"]

if mode == "echo":
    out = {"corrected_text": text, "confidence": 95, "analysis": "no change"}
elif mode == "first":
    # Prefer the first system's hypothesis verbatim.
    out = {"corrected_text": req["hypotheses"][0]["text"], "confidence": 80, "analysis": "first"}
elif mode == "rewrite":
    out = {"corrected_text": "完全唔同嘅一句说话" * 3, "confidence": 70, "analysis": "rewrite"}
elif mode == "noisy":
    # Same correction every time, but the analysis differs between calls.
    out = {"corrected_text": text + "啦", "confidence": 90, "analysis": "%d %f" % (os.getpid(), time.time())}
elif mode == "garbage":
    sys.stdout.write("this is not json")
    sys.exit(0)
elif mode == "badconf":
    out = {"corrected_text": text, "confidence": 101}
elif mode == "fail":
    sys.stderr.write("hook failure\n")
    sys.exit(3)
elif mode == "sleep":
    time.sleep(30)
    out = {"corrected_text": text, "confidence": 50}
else:
    sys.exit(4)

json.dump(out, sys.stdout, ensure_ascii=False)
