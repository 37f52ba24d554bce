import json
import copy
from threading import Lock
from pathlib import Path
from typing import Any, Dict

# 使用新的日志管理器设置方法
from core.logger import get_log_manager, set_config_manager

class ConfigManager:
    '''配置管理器'''
    _lock = Lock() # 进程锁
    _instance = None # 实例化对象
    _config = {} # 配置列表
    _initialized = False # 是否初始化

    config_files = [
        'app.json',
        'physics.json'
    ]

    def __new__(cls):
        # 不在__new__方法中使用锁，避免死锁
        if cls._instance is None:
            cls._instance = super(ConfigManager, cls).__new__(cls)
        return cls._instance

    def __init__(self):
        '''初始化配置管理器'''
        if self._initialized:
            return
        self.logger = get_log_manager().get_logger('config_manager')
        self.root_dir = self.find_root_dir()
        self.config_dir = self.root_dir / 'config'
        self._load_all_config()
        ConfigManager._initialized = True
        # 配置加载完成后再注册, 日志管理器据此重新读取日志配置
        set_config_manager(self)
        get_log_manager().reload_config()
        self.logger.debug("配置管理器初始化完成")

    def find_root_dir(self) -> Path:
        '''
        搜寻根目录

        Returns:
            Path对象(pathlib)
        '''
        current_dir = Path(__file__).resolve().parent
        max_depth = 5

        # 找到包含config的根目录
        for _ in range(max_depth):
            if (current_dir / 'config').is_dir() or current_dir.parent == current_dir:
                return current_dir
            current_dir = current_dir.parent

        self.logger.warning(f"未找到config目录! 当前目录为：{current_dir}")
        return current_dir

    def _load_config(self, file_path: Path) -> Dict[str, Any]:
        '''
        加载单个配置文件

        Args:
            file_path: 配置文件路径

        Returns:
            配置字典
        '''
        try:
            if not file_path.exists():
                self.logger.error(f"配置文件路径出错: {file_path}")
                return {}

            with open(file_path, 'r', encoding='utf-8') as f:
                config = json.load(f)

            self.logger.debug(f"配置文件加载成功: {file_path}")
            return config
        except json.JSONDecodeError as e:
            self.logger.error(f"配置文件解码失败：{e}")
            return {}
        except OSError as e:
            self.logger.error(f"配置文件加载失败：{e}")
            return {}

    def _load_all_config(self):
        '''加载所有配置文件'''
        with self._lock:
            for config_file in self.config_files:
                file_config = self._load_config(self.config_dir / config_file)
                self._config.update(file_config)

    def get_config(self, key: str, default: Any = None,
                   category: str | None = None,
                   subcategory: str | None = None) -> Any:
        """
        获取配置值

        Args:
            key: 配置键名
            default: 默认值（如果配置不存在）
            category: 配置类别（如 'app', 'physics' 等）
            subcategory: 子类别（如 'log', 'run' 等）

        Returns:
            配置值或默认值
        """
        with self._lock:
            if category and subcategory:
                return self._config.get(category, {}).get(subcategory, {}).get(key, default)
            if category:
                return self._config.get(category, {}).get(key, default)
            if key in self._config:
                return self._config[key]
            for category_config in self._config.values():
                if isinstance(category_config, dict) and key in category_config:
                    return category_config[key]
            return default

    def get_category(self, category: str) -> Dict[str, Any]:
        '''
        获取整个配置类别

        Args:
            category: 类别名

        Returns:
            字典副本(防止其他代码对配置的修改)
        '''
        with self._lock:
            return copy.deepcopy(self._config.get(category, {}))

    def get_app(self) -> Dict[str, Any]:
        '''获取app配置'''
        return self.get_category('app')

    def get_physics(self) -> Dict[str, Any]:
        '''获取physics配置(物理常数与参考值)'''
        return self.get_category('physics')

    def get_run_defaults(self) -> Dict[str, Any]:
        '''获取命令行默认运行参数'''
        with self._lock:
            return copy.deepcopy(self._config.get('app', {}).get('run', {}))

    def get_numerics(self) -> Dict[str, Any]:
        '''获取数值计算配置(并行线程数、搜索分辨率等)'''
        with self._lock:
            return copy.deepcopy(self._config.get('app', {}).get('numerics', {}))

    def validate_config(self) -> bool:
        '''验证配置完整性'''
        with self._lock:
            for file in self.config_files:
                if not (self.config_dir / file).exists():
                    self.logger.error(f"配置文件{file}不存在!")
                    return False
                category = file.replace('.json', '')
                if not self._config.get(category):
                    self.logger.error(f"配置文件{file}内容为空!")
                    return False
            return True

def get_config_manager() -> ConfigManager:
    '''获取配置管理器实例'''
    return ConfigManager()
