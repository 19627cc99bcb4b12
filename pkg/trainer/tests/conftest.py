import shutil
import subprocess
import sys


def planner_cli(*args) -> None:
    """Run the planner's command-line tool; the only coupling to the planner
    package is this executable plus the FPD/FCNW file formats."""
    exe = shutil.which("fcnplan")
    cmd = [exe] if exe else [sys.executable, "-m", "fcnplan.cli"]
    subprocess.run([*cmd, *args], check=True)
