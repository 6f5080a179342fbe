"""后端子系统包。"""

