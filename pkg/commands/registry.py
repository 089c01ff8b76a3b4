"""
Command registry with error conversion
"""
import importlib
import logging
import pkgutil
import sys
from typing import Any, Dict

from commands import Command
from grids.errors import KeypointGraphError

log = logging.getLogger(__name__)


class CommandRegistry:
    """Discovers Command subclasses and runs them, turning errors into result dicts"""

    def __init__(self):
        self.commands: Dict[str, Command] = {}
        self.call_count: Dict[str, int] = {}
        self.last_command = None

    def load_all(self) -> int:
        """Load all command classes of the commands package"""
        import commands

        loaded = 0
        for _, module_name, _ in pkgutil.iter_modules(commands.__path__):
            try:
                module = importlib.import_module(f"commands.{module_name}")
            except Exception as e:
                log.warning(f"⚠️ Failed to load module {module_name}: {e}")
                continue

            for obj in module.__dict__.values():
                if isinstance(obj, type) and issubclass(obj, Command) and obj is not Command:
                    if obj.name in self.commands:
                        continue
                    instance = obj()
                    self.commands[instance.name] = instance
                    self.call_count[instance.name] = 0
                    loaded += 1

        log.info(f"✅ Loaded {loaded} commands")
        return loaded

    def call(self, command_name: str, args: Any) -> Dict[str, Any]:
        """Execute a command; never raises"""
        command = self.commands.get(command_name)

        if not command:
            return {
                "error": "unknown_command",
                "command": command_name,
                "success": False,
            }

        if args is None:
            args = {}

        if not isinstance(args, dict):
            return {
                "error": "invalid_arguments",
                "details": f"expected dict, got {type(args).__name__}",
                "success": False,
            }

        try:
            result = command.run(**args)
        except KeypointGraphError as e:
            return {
                "error": e.kind,
                "command": command_name,
                "details": str(e),
                "success": False,
            }
        except TypeError as e:
            return {
                "error": "bad_command_arguments",
                "command": command_name,
                "details": str(e),
                "success": False,
            }
        except Exception as e:
            log.debug(f"{command_name} raised", exc_info=True)
            return {
                "error": "command_runtime_exception",
                "command": command_name,
                "details": f"{type(e).__name__}: {e}",
                "success": False,
            }

        self.call_count[command_name] += 1
        self.last_command = command_name
        return result

    def get_stats(self) -> Dict[str, Any]:
        """Get usage statistics"""
        total_calls = sum(self.call_count.values())

        top_commands = sorted(
            self.call_count.items(),
            key=lambda x: (-x[1], x[0]),
        )[:5]

        return {
            "total_calls": total_calls,
            "unique_commands": len([c for c in self.call_count.values() if c > 0]),
            "top_commands": top_commands,
        }


def print_command_summary(registry: CommandRegistry, stream=None):
    """Print commands grouped by category"""
    stream = stream or sys.stderr
    print("\n" + "=" * 70, file=stream)
    print("🛠️  AVAILABLE COMMANDS", file=stream)
    print("=" * 70, file=stream)

    by_category: Dict[str, list] = {}
    for command in registry.commands.values():
        by_category.setdefault(command.category.value, []).append(command)

    for category in sorted(by_category):
        commands = by_category[category]
        print(f"\n📦 {category.upper()} ({len(commands)} commands)", file=stream)
        print("-" * 70, file=stream)

        for command in sorted(commands, key=lambda c: c.name):
            desc = command.description.split(".")[0]
            if len(desc) > 60:
                desc = desc[:57] + "..."
            print(f"  • {command.name:<12} {desc}", file=stream)

    print("\n" + "=" * 70, file=stream)
    print(f"Total: {len(registry.commands)} commands available", file=stream)
    print("=" * 70 + "\n", file=stream)
