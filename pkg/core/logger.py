import logging
import logging.handlers
import threading
import sys
from logging import Logger
from pathlib import Path
from typing import Any, Dict

# 全局配置管理器引用，用于避免循环导入
_config_manager = None

def set_config_manager(config_manager):
    """设置全局配置管理器引用"""
    global _config_manager
    _config_manager = config_manager

class LogManager:
    '''日志管理器'''

    _lock = threading.Lock()
    _instance = None

    log_level = {
        'DEBUG': logging.DEBUG,
        'INFO': logging.INFO,
        'ERROR': logging.ERROR,
        'WARNING': logging.WARNING
    }

    default_config = {
        'level': 'WARNING',
        'console_output': True,
        'file_output': False,
        'max_file_size': 10,
        'backup_count': 5,
        'log_format': '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        'date_format': '%Y-%m-%d %H:%M:%S',
        'log_dir': 'log'
    }

    def __new__(cls):
        '''重写new方法'''
        if cls._instance is None:
            with cls._lock:
                if cls._instance is None:
                    cls._instance = super(LogManager, cls).__new__(cls)
        return cls._instance

    def __init__(self):
        '''初始化日志管理器'''
        # 使用双检查锁定模式确保单例
        if not hasattr(self, 'initialized'):
            with self._lock:
                if not hasattr(self, 'initialized'):
                    self.initialized = True
                    self.loggers = {}
                    self.log_config = {}
                    self.root_dir = None
                    # 延迟初始化配置，避免循环导入
                    self._initialized_config = False

    def _initialize_config(self):
        """延迟初始化配置"""
        global _config_manager
        if self._initialized_config:
            return
        if _config_manager is None:
            # 没有配置管理器时先用默认配置，配置管理器注册后再重新加载
            if not self.log_config:
                self.log_config = self.default_config.copy()
                self._setup_logger()
            return

        self.config_manager = _config_manager
        self.root_dir = self.config_manager.root_dir
        self.log_config = self._load_log_config()
        self._setup_logger()
        self._initialized_config = True

    def _load_log_config(self) -> Dict[str, Any]:
        '''加载所有日志配置'''
        try:
            if getattr(self, 'config_manager', None) is not None:
                app_config = self.config_manager.get_config('app', {})
                if isinstance(app_config, dict) and isinstance(app_config.get('log'), dict):
                    # 合并默认配置和实际配置
                    merged_config = self.default_config.copy()
                    merged_config.update(app_config['log'])
                    return merged_config
            return self.default_config.copy()
        except Exception as e:
            print(f"加载日志配置时出错: {e}", file=sys.stderr)
            return self.default_config.copy()

    def _setup_logger(self):
        '''配置根日志记录器'''
        try:
            required_keys = ['level', 'log_format', 'date_format', 'log_dir']
            for key in required_keys:
                if key not in self.log_config:
                    raise ValueError(f"缺少必要的日志配置项: {key}")

            level = self.log_level.get(self.log_config['level'], logging.WARNING)
            root_logger = logging.getLogger()
            root_logger.setLevel(level)

            # 清除本管理器之前安装的处理器
            for handler in root_logger.handlers[:]:
                if getattr(handler, '_kaondyn', False):
                    root_logger.removeHandler(handler)

            formatter = logging.Formatter(
                self.log_config['log_format'],
                datefmt=self.log_config['date_format']
            )

            # 控制台输出走stderr, stdout留给CSV
            if self.log_config.get('console_output', True):
                console_handler = logging.StreamHandler(sys.stderr)
                console_handler.setLevel(level)
                console_handler.setFormatter(formatter)
                console_handler._kaondyn = True
                root_logger.addHandler(console_handler)

            if self.log_config.get('file_output', False) and self.root_dir is not None:
                log_dir = Path(self.root_dir) / self.log_config['log_dir']
                log_dir.mkdir(parents=True, exist_ok=True)
                file_handler = logging.handlers.RotatingFileHandler(
                    filename=str(log_dir / 'app.log'),
                    maxBytes=self.log_config.get('max_file_size', 10) * 1024 * 1024,
                    backupCount=self.log_config.get('backup_count', 5),
                    encoding='utf-8'
                )
                file_handler.setLevel(level)
                file_handler.setFormatter(formatter)
                file_handler._kaondyn = True
                root_logger.addHandler(file_handler)

        except (OSError, KeyError, ValueError) as e:
            print(f"配置日志记录器失败: {e}", file=sys.stderr)
            logging.basicConfig(level=logging.WARNING)

    def get_logger(self, name: str) -> Logger:
        '''获取指定名称的日志记录器'''
        self._initialize_config()

        if name not in self.loggers:
            self.loggers[name] = logging.getLogger(name)
        return self.loggers[name]

    def set_logger_level(self, level: str):
        '''设置日志级别'''
        self._initialize_config()

        level = level.upper()
        if level not in self.log_level:
            raise ValueError(f"无效的日志级别: {level}。可选值: {list(self.log_level.keys())}")

        self.log_config['level'] = level
        root_logger = logging.getLogger()
        root_logger.setLevel(self.log_level[level])
        for handler in root_logger.handlers:
            if getattr(handler, '_kaondyn', False):
                handler.setLevel(self.log_level[level])

    def reload_config(self):
        """重新加载日志配置"""
        self._initialized_config = False
        self._initialize_config()

def get_log_manager() -> LogManager:
    """获取日志管理器实例"""
    return LogManager()
