#!/usr/bin/env python3
"""
Bootstrap script for vibronic-sync.
Installs dependencies, creates the run registry and runs the quick tests.
"""

import subprocess
import sys


def run_command(command, description):
    """Run a command and handle errors."""
    print(f"🔄 {description}...")
    try:
        subprocess.run(command, shell=True, check=True, capture_output=True, text=True)
        print(f"✅ {description} completed successfully")
        return True
    except subprocess.CalledProcessError as e:
        print(f"❌ {description} failed: {e}")
        if e.stdout:
            print(f"   stdout: {e.stdout}")
        if e.stderr:
            print(f"   stderr: {e.stderr}")
        return False


def check_python_version():
    """Check if Python version is compatible."""
    if sys.version_info < (3, 12):
        print("❌ Python 3.12 or higher is required")
        return False
    print(f"✅ Python {sys.version_info.major}.{sys.version_info.minor} detected")
    return True


def install_dependencies(with_oracle=False):
    """Install the package and its test extras using uv."""
    if not run_command("uv --version", "Checking for uv"):
        print("❌ uv is not installed. Please install uv first:")
        print("   curl -LsSf https://astral.sh/uv/install.sh | sh")
        return False

    extras = "--extra test --extra oracle" if with_oracle else "--extra test"
    return run_command(f"uv sync {extras}", "Installing dependencies with uv")


def setup_registry():
    """Create the SQLite run registry named in application.yaml."""
    print("\n🗄️  Run Registry Setup")
    print("=" * 50)
    return run_command("uv run python -m db.init_db", "Creating registry tables")


def test_setup():
    """Run the fast part of the test suite."""
    print("\n🧪 Testing Setup")
    print("=" * 50)

    if run_command('uv run pytest -q -m "not slow and not oracle"', "Running quick tests"):
        print("✅ All tests passed!")
        return True
    print("❌ Some tests failed. Run `uv run pytest -m 'not slow'` to see the details.")
    return False


def main():
    """Main setup function."""
    print("🚀 vibronic-sync Setup")
    print("=" * 50)

    if not check_python_version():
        sys.exit(1)

    if not install_dependencies(with_oracle="--oracle" in sys.argv[1:]):
        print("❌ Failed to install dependencies")
        sys.exit(1)

    if not setup_registry():
        print("❌ Failed to create the run registry")
        sys.exit(1)

    if not test_setup():
        print("❌ Setup verification failed")
        sys.exit(1)

    print("\n🎉 Setup completed successfully!")
    print("\nNext steps:")
    print("1. Run the demo: uv run python demo_sync.py")
    print("2. Reproduce the reference table: uv run vibronic-sync table2 --strict")
    print("3. Check the documentation: README.md and RUN_REGISTRY.md")


if __name__ == "__main__":
    main()
